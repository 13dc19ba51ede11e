#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "retisim/analog_front.hpp"

using namespace retisim;
using namespace retisim::analog;

namespace {

const PVModel& model() {
    static const PVModel m = PVModel::calibrated();
    return m;
}

// dense-grid scan, independent of the golden-section search
double mpp_grid_oracle(const PVModel& m, double p_mw) {
    const double voc = m.v_oc(p_mw);
    double best = 0.0;
    for (int i = 0; i <= 200000; ++i) {
        const double v = voc * i / 200000.0;
        best = std::max(best, v * m.current_ma(v, p_mw));
    }
    return best;
}

} // namespace

TEST_CASE("calibration hits the measured anchors") {
    const auto mpp = max_power_point(model(), 30.0);
    CHECK(mpp.v == doctest::Approx(4.7).epsilon(1e-6));
    CHECK(mpp.p_mw == doctest::Approx(16.3).epsilon(1e-6));
    CHECK(mpp.efficiency == doctest::Approx(16.3 / 30.0).epsilon(1e-6));

    const auto op = operating_point(model(), 24.0, Load::resistive(nominal_dc_load_kohm()));
    CHECK(op.v == doctest::Approx(3.4).epsilon(1e-6));
    CHECK(op.i_ma == doctest::Approx(2.98).epsilon(1e-6));
    CHECK(op.p_mw == doctest::Approx(10.132).epsilon(1e-4));

    CHECK(model().ideality >= 1.0);
    // open-circuit voltage lands near the nameplate
    CHECK(model().v_oc(30.0) > 4.7);
    CHECK(model().v_oc(30.0) < 6.0);
}

TEST_CASE("iv curve basics") {
    SUBCASE("dark cell delivers nothing") {
        const auto dark = iv_curve(model(), 0.0);
        for (double i : dark.current_ma)
            CHECK(i == doctest::Approx(0.0));
        CHECK(model().v_oc(0.0) == 0.0);
    }
    SUBCASE("nominal voltage at the bench intensity") {
        CHECK(model().v_oc(30.0) == doctest::Approx(5.0).epsilon(0.15));
    }
    SUBCASE("photocurrent is linear in power") {
        CHECK(model().current_ma(0.0, 20.0) ==
              doctest::Approx(2.0 * model().current_ma(0.0, 10.0)).epsilon(1e-12));
    }
}

TEST_CASE("max power point against the grid oracle") {
    for (double p : {6.0, 12.0, 24.0, 30.0}) {
        const auto mpp = max_power_point(model(), p);
        CHECK(mpp.p_mw == doctest::Approx(mpp_grid_oracle(model(), p)).epsilon(1e-7));
        // electrical out never exceeds the optical in
        CHECK(mpp.p_mw < p);
    }
    // near-linear scaling below the anchor
    const auto mpp24 = max_power_point(model(), 24.0);
    CHECK(mpp24.p_mw > 12.0);
    CHECK(mpp24.p_mw < 14.0);
}

TEST_CASE("operating point edge cases") {
    SUBCASE("open circuit") {
        const auto op = operating_point(model(), 24.0,
                                        Load::resistive(std::numeric_limits<double>::infinity()));
        CHECK(op.v == doctest::Approx(model().v_oc(24.0)));
        CHECK(op.i_ma == 0.0);
    }
    SUBCASE("short circuit") {
        const auto op = operating_point(model(), 24.0, Load::resistive(0.0));
        CHECK(op.v == 0.0);
        CHECK(op.i_ma == doctest::Approx(model().i_ph_per_mw * 24.0));
    }
    SUBCASE("residual of the loaded solution") {
        const auto op = operating_point(model(), 18.0, Load::resistive(2.0));
        CHECK(model().current_ma(op.v, 18.0) == doctest::Approx(op.v / 2.0).epsilon(1e-9));
    }
    SUBCASE("constant power within capability") {
        const auto op = operating_point(model(), 24.0, Load::constant_power(10.132));
        CHECK(op.p_mw == doctest::Approx(10.132).epsilon(1e-6));
        CHECK_FALSE(op.brown_out);
    }
    SUBCASE("constant power beyond the MPP browns out") {
        const auto op = operating_point(model(), 24.0, Load::constant_power(14.0));
        CHECK(op.brown_out);
    }
}

TEST_CASE("transient response reproduces the measured edges") {
    // slow square modulation: settles fully each half period
    const double p_hi = power_for_voltage(model(), 1.5, 4.25);
    const double p_lo = power_for_voltage(model(), 1.5, 3.6);
    Waveform p_in;
    p_in.dt_ns = 10.0;
    const double half_period_ns = 5000.0; // 100 kHz
    const int n_periods = 6;
    for (int period = 0; period < 2 * n_periods; ++period) {
        const double level = period % 2 == 0 ? p_lo : p_hi;
        for (int i = 0; i < static_cast<int>(half_period_ns / p_in.dt_ns); ++i)
            p_in.samples.push_back(level);
    }
    const auto out = pv_transient(model(), p_in, 1.5);
    // drop the first period before measuring
    Waveform settled;
    settled.dt_ns = out.dt_ns;
    settled.samples.assign(out.voltage_v.begin() + 1000, out.voltage_v.end());
    const auto edges = measure_rise_fall(settled, 0.3, 0.7);
    CHECK(edges.rise_ns == doctest::Approx(370.0).epsilon(0.02));
    CHECK(edges.fall_ns == doctest::Approx(190.0).epsilon(0.02));
    CHECK(settled.min_value() == doctest::Approx(3.6).epsilon(0.002));
    CHECK(settled.max_value() == doctest::Approx(4.25).epsilon(0.002));
}

TEST_CASE("transient time constants from the single-pole relation") {
    // t(30-70%) = tau * ln(7/3) for a full step
    CHECK(model().tau_rise_ns == doctest::Approx(370.0 / std::log(7.0 / 3.0)).epsilon(1e-9));
    CHECK(model().tau_fall_ns == doctest::Approx(190.0 / std::log(7.0 / 3.0)).epsilon(1e-9));
}

TEST_CASE("transient steady state matches the static operating point") {
    Waveform p_in;
    p_in.dt_ns = 10.0;
    p_in.samples.assign(2000, 24.0);
    const auto out = pv_transient(model(), p_in, nominal_dc_load_kohm());
    const auto op = operating_point(model(), 24.0, Load::resistive(nominal_dc_load_kohm()));
    CHECK(out.voltage_v.back() == doctest::Approx(op.v).epsilon(1e-3));
}

TEST_CASE("zero time constants select the static trajectory") {
    PVModel ideal = model();
    ideal.tau_rise_ns = 0.0;
    ideal.tau_fall_ns = 0.0;
    Waveform p_in;
    p_in.dt_ns = 10.0;
    for (int i = 0; i < 200; ++i)
        p_in.samples.push_back(i < 100 ? 20.0 : 24.0);
    const auto out = pv_transient(ideal, p_in, 1.5);
    const auto lo = operating_point(model(), 20.0, Load::resistive(1.5));
    const auto hi = operating_point(model(), 24.0, Load::resistive(1.5));
    CHECK(out.voltage_v[50] == doctest::Approx(lo.v).epsilon(1e-6));
    CHECK(out.voltage_v[150] == doctest::Approx(hi.v).epsilon(1e-6));
}

TEST_CASE("transient rejects a coarse time step") {
    Waveform p_in;
    p_in.dt_ns = 100.0; // fall constant is ~224 ns; needs <= tau/10
    p_in.samples.assign(100, 24.0);
    CHECK_THROWS_AS(pv_transient(model(), p_in, 1.5), ValidationError);
}

TEST_CASE("photodiode current") {
    SUBCASE("dark and linear") {
        Waveform zero;
        zero.dt_ns = 10.0;
        zero.samples.assign(100, 0.0);
        for (double i : photodiode_current(0.55, zero).samples)
            CHECK(i == 0.0);
        Waveform one;
        one.dt_ns = 10.0;
        one.samples.assign(2000, 1.0);
        Waveform two = one;
        for (double& x : two.samples)
            x *= 2.0;
        const auto i1 = photodiode_current(0.55, one);
        const auto i2 = photodiode_current(0.55, two);
        CHECK(i2.samples.back() == doctest::Approx(2.0 * i1.samples.back()).epsilon(1e-9));
    }
    SUBCASE("small-signal -3 dB at the rated bandwidth") {
        // sine at 3.7 MHz through the single-pole limit
        Waveform sine;
        sine.dt_ns = 1.0;
        const double f_hz = 3.7e6;
        const int n = 200000;
        for (int i = 0; i < n; ++i)
            sine.samples.push_back(1.0 + 0.5 * std::sin(2.0 * M_PI * f_hz * i * 1e-9));
        const auto out = photodiode_current(1.0, sine, 3.7);
        double lo = 1e9, hi = -1e9;
        for (int i = n / 2; i < n; ++i) {
            lo = std::min(lo, out.samples[static_cast<std::size_t>(i)]);
            hi = std::max(hi, out.samples[static_cast<std::size_t>(i)]);
        }
        const double gain = (hi - lo) / 1.0;
        CHECK(gain == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.03));
    }
}

TEST_CASE("interface digitization") {
    const InterfaceCircuit circ;
    CHECK(circ.hp_corner_hz() == doctest::Approx(1293.9).epsilon(0.001));

    // 600 kHz square optical input on the photodiode
    auto make_square = [&](double p_lo, double p_hi, int n_half, double half_ns) {
        Waveform w;
        w.dt_ns = 10.0;
        for (int h = 0; h < n_half; ++h) {
            const double level = h % 2 ? p_hi : p_lo;
            for (int i = 0; i < static_cast<int>(half_ns / w.dt_ns); ++i)
                w.samples.push_back(level);
        }
        return w;
    };
    const double pd_gain = circ.responsivity_ma_per_mw * circ.pd_power_fraction;
    Waveform optical = make_square(20.0, 28.0, 240, 833.33);
    Waveform i_pd;
    i_pd.dt_ns = optical.dt_ns;
    for (double p : optical.samples)
        i_pd.samples.push_back(p * pd_gain);
    i_pd = photodiode_current(1.0, i_pd);

    SUBCASE("output edges carry the configured shaping") {
        const auto trace = interface_digitize(circ, i_pd, 4.98);
        Waveform tail;
        tail.dt_ns = trace.pair.p.dt_ns;
        tail.samples.assign(trace.pair.p.samples.begin() + 12000,
                            trace.pair.p.samples.end());
        const auto edges = measure_rise_fall(tail, 0.1, 0.9);
        CHECK(edges.rise_ns == doctest::Approx(112.0).epsilon(0.05));
        CHECK(edges.fall_ns == doctest::Approx(160.0).epsilon(0.05));
        CHECK(tail.max_value() == doctest::Approx(4.98).epsilon(1e-3));
    }
    SUBCASE("outputs are complementary outside transitions") {
        const auto trace = interface_digitize(circ, i_pd, 4.98);
        int checked = 0;
        for (std::size_t i = 12000; i < trace.pair.p.size(); ++i) {
            const double p = trace.pair.p.samples[i];
            const double n = trace.pair.n.samples[i];
            if ((p < 0.05 || p > 4.93) && (n < 0.05 || n > 4.93)) {
                CHECK(p + n == doctest::Approx(4.98).epsilon(0.03));
                ++checked;
            }
        }
        CHECK(checked > 1000);
    }
    SUBCASE("constant power produces no transitions") {
        Waveform flat;
        flat.dt_ns = 10.0;
        flat.samples.assign(20000, 24.0 * pd_gain);
        const auto trace = interface_digitize(circ, flat, 4.98);
        CHECK(trace.pair.p.max_value() < 0.05); // held low, AC coupling blocks DC
    }
    SUBCASE("ripple inside the hysteresis window does not toggle") {
        Waveform ripple;
        ripple.dt_ns = 10.0;
        for (int i = 0; i < 20000; ++i)
            ripple.samples.push_back((24.0 + 0.2 * std::sin(i * 0.01)) * pd_gain);
        const auto trace = interface_digitize(circ, ripple, 4.98);
        CHECK(trace.pair.p.max_value() < 0.05);
    }
    SUBCASE("DC offset on the optical power does not shift edge timing") {
        Waveform shifted = optical;
        for (double& p : shifted.samples)
            p += 6.0;
        Waveform i_shift;
        i_shift.dt_ns = shifted.dt_ns;
        for (double p : shifted.samples)
            i_shift.samples.push_back(p * pd_gain);
        i_shift = photodiode_current(1.0, i_shift);
        const auto a = interface_digitize(circ, i_pd, 4.98);
        const auto b = interface_digitize(circ, i_shift, 4.98);
        // compare the last few toggle instants
        auto toggles = [](const Waveform& w) {
            std::vector<double> t;
            for (std::size_t i = 12000; i < w.size(); ++i)
                if ((w.samples[i - 1] < 2.49) != (w.samples[i] < 2.49))
                    t.push_back(w.time_ns(i));
            return t;
        };
        const auto ta = toggles(a.pair.p);
        const auto tb = toggles(b.pair.p);
        REQUIRE(ta.size() == tb.size());
        for (std::size_t i = 0; i < ta.size(); ++i)
            CHECK(ta[i] == doctest::Approx(tb[i]).epsilon(1e-9));
    }
    SUBCASE("under-supply holds the outputs low") {
        const auto trace = interface_digitize(circ, i_pd, 1.5);
        CHECK(trace.pair.p.max_value() == 0.0);
        CHECK(trace.pair.n.max_value() == 0.0);
    }
}

TEST_CASE("interface quiescent power") {
    const InterfaceCircuit circ;
    CHECK(interface_quiescent_power(circ, 4.98) == doctest::Approx(4.78).epsilon(0.001));
    CHECK(interface_quiescent_power(circ, 0.0) == 0.0);
    CHECK(interface_quiescent_power(circ, 3.4) == doctest::Approx(3.264).epsilon(1e-9));
}

TEST_CASE("rise/fall measurement") {
    SUBCASE("ideal step has zero edge times") {
        Waveform step;
        step.dt_ns = 10.0;
        for (int i = 0; i < 100; ++i)
            step.samples.push_back(i < 50 ? 0.0 : 1.0);
        const auto e = measure_rise_fall(step, 0.3, 0.7);
        CHECK(e.rise_ns < step.dt_ns);
    }
    SUBCASE("single-pole edge matches the analytic value") {
        Waveform rc;
        rc.dt_ns = 1.0;
        const double tau = 250.0;
        for (int i = 0; i < 600; ++i)
            rc.samples.push_back(i < 100 ? 0.0 : 1.0 - std::exp(-(i - 100) / tau));
        rc.samples.push_back(1.0); // close the swing
        const auto e = measure_rise_fall(rc, 0.3, 0.7);
        CHECK(e.rise_ns == doctest::Approx(tau * std::log(7.0 / 3.0)).epsilon(0.02));
    }
    SUBCASE("no transitions is an error") {
        Waveform flat;
        flat.dt_ns = 10.0;
        flat.samples.assign(100, 1.0);
        CHECK_THROWS_AS(measure_rise_fall(flat, 0.3, 0.7), ValidationError);
    }
    SUBCASE("bad fractions are an error") {
        Waveform step;
        step.dt_ns = 10.0;
        for (int i = 0; i < 100; ++i)
            step.samples.push_back(i < 50 ? 0.0 : 1.0);
        CHECK_THROWS_AS(measure_rise_fall(step, 0.7, 0.3), ValidationError);
    }
}

TEST_CASE("PV model persistence round trip") {
    const std::string path = "pv_model_test.cfg";
    model().save(path);
    const auto back = PVModel::load(path);
    CHECK(back.i_ph_per_mw == doctest::Approx(model().i_ph_per_mw).epsilon(1e-15));
    CHECK(back.i0_ma == doctest::Approx(model().i0_ma).epsilon(1e-15));
    CHECK(back.ideality == doctest::Approx(model().ideality).epsilon(1e-15));
    CHECK(back.tau_rise_ns == doctest::Approx(model().tau_rise_ns).epsilon(1e-15));
    std::remove(path.c_str());
}
