// Acceptance suite: runs every release criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exit status is the failure count.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "retisim/analog_front.hpp"
#include "retisim/asic.hpp"
#include "retisim/budget.hpp"
#include "retisim/harness.hpp"
#include "retisim/spectral.hpp"
#include "retisim/telemetry.hpp"

using namespace retisim;

namespace {

struct Check {
    std::string name;
    std::function<bool(std::string&)> run;
};

bool within(double value, double target, double tol) {
    return std::abs(value - target) <= tol;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool criterion_wavelength_optimum(std::string& detail) {
    const auto res = spectral::optimum_wavelength(600.0, 1000.0, 1.0);
    char buf[128];
    std::snprintf(buf, sizeof buf, "lambda=%.1f nm, capacity=%.4f mW", res.lambda_nm,
                  res.capacity_mw);
    detail = buf;
    const double expected_capacity = 36.5 * 0.80 * 0.93; // 27.156
    return within(res.lambda_nm, 850.0, 2.0) &&
           within(res.capacity_mw, expected_capacity, 0.01 * expected_capacity) &&
           !res.zero_capacity;
}

bool criterion_pv_static(std::string& detail) {
    const auto model = analog::PVModel::calibrated();
    const auto mpp = analog::max_power_point(model, 30.0);
    const auto op = analog::operating_point(
        model, 24.0, analog::Load::resistive(analog::nominal_dc_load_kohm()));
    char buf[192];
    std::snprintf(buf, sizeof buf,
                  "MPP (%.3f V, %.3f mW, eff %.1f%%); op (%.3f V, %.3f mA, %.3f mW)",
                  mpp.v, mpp.p_mw, 100.0 * mpp.efficiency, op.v, op.i_ma, op.p_mw);
    detail = buf;
    return within(mpp.v, 4.7, 0.1) && within(mpp.p_mw, 16.3, 0.3) &&
           within(100.0 * mpp.efficiency, 54.0, 1.0) && within(op.v, 3.4, 0.1) &&
           within(op.i_ma, 2.98, 0.1) && within(op.p_mw, 10.1, 0.3);
}

bool criterion_pv_transient(std::string& detail) {
    const auto model = analog::PVModel::calibrated();
    // square modulation slow enough for full settling, levels set so the
    // loaded cell swings across the measured window
    const double p_hi = analog::power_for_voltage(model, 1.5, 4.25);
    const double p_lo = analog::power_for_voltage(model, 1.5, 3.6);
    Waveform p_in;
    p_in.dt_ns = 10.0;
    const int samples_per_half = 500; // 5 us halves -> 100 kHz
    for (int half = 0; half < 12; ++half) {
        const double level = half % 2 == 0 ? p_lo : p_hi;
        for (int i = 0; i < samples_per_half; ++i)
            p_in.samples.push_back(level);
    }
    const auto out = analog::pv_transient(model, p_in, 1.5);
    Waveform settled;
    settled.dt_ns = out.dt_ns;
    settled.samples.assign(out.voltage_v.begin() + 2 * samples_per_half,
                           out.voltage_v.end());
    const auto edges = measure_rise_fall(settled, 0.3, 0.7);
    const double vmin = settled.min_value();
    const double vmax = settled.max_value();
    char buf[160];
    std::snprintf(buf, sizeof buf, "rise %.1f ns, fall %.1f ns, swing [%.3f, %.3f] V",
                  edges.rise_ns, edges.fall_ns, vmin, vmax);
    detail = buf;
    return within(edges.rise_ns, 370.0, 20.0) && within(edges.fall_ns, 190.0, 20.0) &&
           within(vmin, 3.6, 0.05) && within(vmax, 4.25, 0.05);
}

bool criterion_interface(std::string& detail) {
    const analog::InterfaceCircuit circ;
    // 600 kHz square optical input through the photodiode
    Waveform optical;
    optical.dt_ns = 10.0;
    for (int half = 0; half < 240; ++half) {
        const double level = half % 2 == 0 ? 20.0 : 28.0;
        for (int i = 0; i < 83; ++i)
            optical.samples.push_back(level);
    }
    Waveform pd_in = optical;
    for (double& x : pd_in.samples)
        x *= circ.pd_power_fraction;
    const auto i_pd = analog::photodiode_current(circ.responsivity_ma_per_mw, pd_in);
    const auto trace = analog::interface_digitize(circ, i_pd, 4.98);
    Waveform tail;
    tail.dt_ns = trace.pair.p.dt_ns;
    tail.samples.assign(trace.pair.p.samples.begin() +
                            static_cast<std::ptrdiff_t>(trace.pair.p.size() / 2),
                        trace.pair.p.samples.end());
    const auto edges = measure_rise_fall(tail, 0.1, 0.9);
    const double quiescent = analog::interface_quiescent_power(circ, 4.98);
    char buf[160];
    std::snprintf(buf, sizeof buf, "rise %.1f ns, fall %.1f ns, quiescent %.3f mW",
                  edges.rise_ns, edges.fall_ns, quiescent);
    detail = buf;
    return within(edges.rise_ns, 112.0, 15.0) && within(edges.fall_ns, 160.0, 15.0) &&
           within(quiescent, 4.78, 0.1);
}

bool criterion_telemetry(std::string& detail) {
    std::mt19937_64 rng(20240601);
    std::vector<std::uint8_t> payload(100000);
    for (auto& b : payload)
        b = static_cast<std::uint8_t>(rng() & 1u);

    // Manchester round trip on an ideal sampled stream
    const auto symbols = telemetry::manchester_encode(telemetry::BitStream{payload, 600.0});
    Waveform levels;
    levels.dt_ns = symbols.half_period_ns() / 8.0;
    levels.samples.reserve(symbols.levels.size() * 8);
    for (auto lvl : symbols.levels)
        for (int k = 0; k < 8; ++k)
            levels.samples.push_back(lvl);
    const auto decoded = telemetry::manchester_decode(levels, 600.0);
    const bool roundtrip_ok = decoded.bits == payload;
    const bool clock_ok = within(decoded.recovered_bitrate_kbps, 600.0, 6.0);

    // end-to-end BER through the analog front end
    harness::LinkBerConfig cfg;
    const auto ber = harness::link_ber_run(payload, cfg);

    // exhaustive single-bit fault injection on a minimal 48-bit frame
    telemetry::Frame f;
    f.opcode = 0x03;
    const auto clean = telemetry::frame_encode(f);
    bool faults_ok = clean.bits.size() == 48;
    for (std::size_t i = 0; i < clean.bits.size() && faults_ok; ++i) {
        auto corrupted = clean;
        corrupted.bits[i] ^= 1;
        faults_ok = !telemetry::frame_decode(corrupted).ok();
    }
    char buf[192];
    std::snprintf(buf, sizeof buf,
                  "roundtrip %s, clock %.2f kHz, e2e BER %zu/%zu, 48 flips rejected %s",
                  roundtrip_ok ? "exact" : "MISMATCH", decoded.recovered_bitrate_kbps,
                  ber.errors, ber.compared, faults_ok ? "all" : "NOT ALL");
    detail = buf;
    return roundtrip_ok && clock_ok && ber.errors == 0 &&
           ber.compared == payload.size() && faults_ok;
}

bool criterion_asic(std::string& detail) {
    // one POR per power-up, only with rails and clock
    asic::StimulatorAsic chip;
    bool por_ok = !chip.update_power(2.5, false).has_value();
    por_ok = por_ok && !chip.update_power(3.4, false).has_value();
    por_ok = por_ok && chip.update_power(3.4, true).has_value();
    por_ok = por_ok && !chip.update_power(3.4, true).has_value();

    // scripted pulse plateaus
    asic::StimParams p; // 250 uA / 500 us biphasic defaults
    asic::DacModel with_error;
    const auto hot = asic::drive_electrode(0, p, with_error, asic::ResistiveLoad{10.0}, 3.3);
    asic::DacModel no_error;
    no_error.gain_error = 0.0;
    const auto cold = asic::drive_electrode(0, p, no_error, asic::ResistiveLoad{10.0}, 3.3);

    // charge balance across the DAC range
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> amp(10.0, 500.0);
    std::uniform_real_distribution<double> dur(100.0, 1000.0);
    double worst_nc = 0.0;
    for (int i = 0; i < 500; ++i) {
        asic::StimParams q;
        q.amplitude_ua = amp(rng);
        q.phase1_us = dur(rng);
        q.phase2_us = q.phase1_us;
        const auto w = asic::generate_pulse(q, with_error);
        worst_nc = std::max(worst_nc, std::abs(asic::charge_balance(w)));
    }
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "POR %s, plateau %.4f V (8%%) / %.4f V (0%%), worst |charge| %.2g nC",
                  por_ok ? "once" : "WRONG", hot.plateau_v, cold.plateau_v, worst_nc);
    detail = buf;
    return por_ok && within(hot.plateau_v, 2.70, 0.02) &&
           within(cold.plateau_v, 2.50, 0.02) && worst_nc < 1.0;
}

bool criterion_budget(std::string& detail) {
    const auto r = budget::power_chain(30.0, 850.0);
    const auto limits = budget::thermal_limits({}, budget::kFluxLimitMwPerMm2);
    const auto v = budget::verdict(r);
    char buf[224];
    std::snprintf(buf, sizeof buf,
                  "retina %.2f, loss %.2f, dissipated %.2f, electrical %.2f mW; "
                  "limits %.1f/%.1f mW; verdict %s",
                  r.p_retina_mw, r.p_optical_loss_mw, r.p_dissipated_mw, r.p_electrical_mw,
                  limits.limit_2d_mw, limits.limit_3d_mw, v.pass ? "pass" : "fail");
    detail = buf;
    auto within_rel = [](double value, double target, double rel) {
        return std::abs(value - target) <= rel * target;
    };
    return within_rel(r.p_retina_mw, 24.0, 0.02) &&
           within_rel(r.p_optical_loss_mw, 1.7, 0.02) &&
           within_rel(r.p_dissipated_mw, 22.3, 0.02) &&
           within_rel(r.p_electrical_mw, 10.1, 0.02) &&
           std::round(limits.limit_2d_mw * 10.0) / 10.0 == 24.8 &&
           std::round(limits.limit_3d_mw * 10.0) / 10.0 == 71.5 && v.pass;
}

bool criterion_lid_optics(std::string& detail) {
    const double r_ad = spectral::fresnel_reflectance(1.0, 2.4, 0.0);
    const double r_qd = spectral::fresnel_reflectance(1.336, 2.4, 0.0);
    const double t_ada = spectral::lid_transmission({1.0, 2.4, 1.0, 0.0});
    const double t_qda = spectral::lid_transmission({1.336, 2.4, 1.0, 0.0});
    const double t_ada5 = spectral::lid_transmission({1.0, 2.4, 1.0, 5.0});
    const double t_qda5 = spectral::lid_transmission({1.336, 2.4, 1.0, 5.0});
    char buf[160];
    std::snprintf(buf, sizeof buf, "R %.1f%%/%.1f%%, T %.1f%%/%.1f%%, dT(5deg) %.3f%%/%.3f%%",
                  100 * r_ad, 100 * r_qd, 100 * t_ada, 100 * t_qda,
                  100 * std::abs(t_ada5 - t_ada), 100 * std::abs(t_qda5 - t_qda));
    detail = buf;
    return within(100 * r_ad, 17.0, 1.0) && within(100 * r_qd, 8.0, 1.0) &&
           within(100 * t_ada, 69.0, 1.0) && within(100 * t_qda, 76.0, 1.0) &&
           std::abs(t_ada5 - t_ada) < 0.01 && std::abs(t_qda5 - t_qda) < 0.01;
}

bool criterion_determinism(std::string& detail) {
    const auto scenario = harness::Scenario::paper_nominal();
    const auto a = harness::run_end_to_end(scenario);
    const auto b = harness::run_end_to_end(scenario);
    const std::string dir_a = "acceptance_det_a";
    const std::string dir_b = "acceptance_det_b";
    const auto files_a = harness::emit(a, dir_a);
    const auto files_b = harness::emit(b, dir_b);
    bool identical = a.bundle_hash == b.bundle_hash && files_a.size() == files_b.size();
    for (std::size_t i = 0; identical && i < files_a.size(); ++i)
        identical = slurp(files_a[i]) == slurp(files_b[i]);
    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);
    char buf[96];
    std::snprintf(buf, sizeof buf, "hash %016llx, %zu files byte-identical",
                  static_cast<unsigned long long>(a.bundle_hash), files_a.size());
    detail = buf;
    return identical;
}

} // namespace

int main() {
    const std::vector<Check> checks = {
        {"1. wavelength optimum", criterion_wavelength_optimum},
        {"2. PV static calibration", criterion_pv_static},
        {"3. PV transient response", criterion_pv_transient},
        {"4. interface circuit", criterion_interface},
        {"5. telemetry", criterion_telemetry},
        {"6. stimulator behaviour", criterion_asic},
        {"7. power budget", criterion_budget},
        {"8. lid optics", criterion_lid_optics},
        {"9. determinism", criterion_determinism},
    };
    int failures = 0;
    for (const auto& check : checks) {
        std::string detail;
        bool ok = false;
        try {
            ok = check.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] %-28s %s\n", ok ? "PASS" : "FAIL", check.name.c_str(),
                    detail.c_str());
        failures += ok ? 0 : 1;
    }
    if (failures)
        std::printf("%d criterion(s) failed\n", failures);
    else
        std::printf("all %zu criteria passed\n", checks.size());
    return failures;
}
