#include "retisim/analog_front.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace retisim::analog {

namespace {

// Measured anchors the calibration reproduces exactly.
constexpr double kMppVoltageV = 4.7;
constexpr double kMppPowerMw = 16.3;
constexpr double kMppInputMw = 30.0;
constexpr double kOpVoltageV = 3.4;
constexpr double kOpCurrentMa = 2.98;
constexpr double kOpInputMw = 24.0;
constexpr double kRiseMeasuredNs = 370.0; // 30-70% under square illumination
constexpr double kFallMeasuredNs = 190.0;

// 30-70% of a single-pole step spans ln(7/3) time constants.
const double kEdgeFractionLog = std::log(7.0 / 3.0);

} // namespace

double PVModel::current_ma(double v, double p_mw) const {
    return i_ph_per_mw * p_mw - i0_ma * std::expm1(v / stack_vt());
}

double PVModel::v_oc(double p_mw) const {
    if (p_mw <= 0.0)
        return 0.0;
    return stack_vt() * std::log1p(i_ph_per_mw * p_mw / i0_ma);
}

PVModel PVModel::calibrated() {
    // With the MPP pinned at (Vm, Im), the stationarity condition
    //   Im = Vm * (i0/m) * exp(Vm/m)
    // and the curve passing through the point fix i0 and the photocurrent
    // scale as functions of the stack voltage scale m. The loaded operating
    // point then determines m; solve it by bisection. The ~5 V nameplate
    // open-circuit voltage is treated as descriptive, not fitted.
    const double i_mpp = kMppPowerMw / kMppVoltageV;
    auto i0_of = [&](double m) {
        return i_mpp * m / kMppVoltageV * std::exp(-kMppVoltageV / m);
    };
    auto k_of = [&](double m) {
        return (i_mpp + i0_of(m) * std::expm1(kMppVoltageV / m)) / kMppInputMw;
    };
    auto op_residual = [&](double m) {
        return k_of(m) * kOpInputMw - i0_of(m) * std::expm1(kOpVoltageV / m) - kOpCurrentMa;
    };
    double lo = 0.2, hi = 0.6; // residual is increasing in m on this bracket
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (op_residual(mid) < 0.0 ? lo : hi) = mid;
    }
    const double m = 0.5 * (lo + hi);

    PVModel model;
    model.n_junctions = 5;
    model.thermal_voltage_v = 0.02585;
    model.ideality = m / (model.n_junctions * model.thermal_voltage_v);
    model.i0_ma = i0_of(m);
    model.i_ph_per_mw = k_of(m);
    model.v_oc_nominal_v = 5.0;
    model.tau_rise_ns = kRiseMeasuredNs / kEdgeFractionLog;
    model.tau_fall_ns = kFallMeasuredNs / kEdgeFractionLog;
    return model;
}

void PVModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out)
        throw ValidationError("cannot write PV model config: " + path);
    char buf[96];
    auto kv = [&](const char* key, double v) {
        std::snprintf(buf, sizeof buf, "%s = %.17g\n", key, v);
        out << buf;
    };
    out << "n_junctions = " << n_junctions << "\n";
    kv("i_ph_per_mw", i_ph_per_mw);
    kv("i0_ma", i0_ma);
    kv("ideality", ideality);
    kv("thermal_voltage_v", thermal_voltage_v);
    kv("v_oc_nominal_v", v_oc_nominal_v);
    kv("tau_rise_ns", tau_rise_ns);
    kv("tau_fall_ns", tau_fall_ns);
}

PVModel PVModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open PV model config: " + path);
    std::map<std::string, double> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            continue;
        std::string key = line.substr(0, eq);
        key.erase(key.find_last_not_of(" \t") + 1);
        key.erase(0, key.find_first_not_of(" \t"));
        kv[key] = std::stod(line.substr(eq + 1));
    }
    PVModel m;
    auto need = [&](const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end())
            throw ValidationError("PV model config missing key: " + key);
        return it->second;
    };
    m.n_junctions = static_cast<int>(need("n_junctions"));
    m.i_ph_per_mw = need("i_ph_per_mw");
    m.i0_ma = need("i0_ma");
    m.ideality = need("ideality");
    m.thermal_voltage_v = need("thermal_voltage_v");
    m.v_oc_nominal_v = need("v_oc_nominal_v");
    m.tau_rise_ns = need("tau_rise_ns");
    m.tau_fall_ns = need("tau_fall_ns");
    if (m.i0_ma <= 0.0 || m.ideality < 1.0 || m.n_junctions < 1)
        throw ValidationError("PV model config out of range");
    return m;
}

double nominal_dc_load_kohm() {
    return kOpVoltageV / kOpCurrentMa;
}

ElectricalWaveform iv_curve(const PVModel& model, double p_mw, int n_points) {
    if (p_mw < 0.0)
        throw ValidationError("optical power must be >= 0");
    if (n_points < 2)
        throw ValidationError("need at least two curve points");
    const double voc = model.v_oc(p_mw);
    ElectricalWaveform curve;
    curve.dt_ns = 1.0; // index axis; the curve is V-parameterised, not timed
    curve.voltage_v.resize(static_cast<std::size_t>(n_points));
    curve.current_ma.resize(static_cast<std::size_t>(n_points));
    for (int k = 0; k < n_points; ++k) {
        const double v = voc * k / (n_points - 1);
        curve.voltage_v[static_cast<std::size_t>(k)] = v;
        curve.current_ma[static_cast<std::size_t>(k)] =
            std::max(0.0, model.current_ma(v, p_mw));
    }
    return curve;
}

MaxPowerPoint max_power_point(const PVModel& model, double p_mw) {
    if (p_mw <= 0.0)
        throw ValidationError("maximum power point needs positive optical power");
    // P(V) = V*I(V) is unimodal on [0, Voc]; golden-section search.
    const double voc = model.v_oc(p_mw);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = 0.0, b = voc;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    auto p_of = [&](double v) { return v * model.current_ma(v, p_mw); };
    double pc = p_of(c), pd = p_of(d);
    for (int it = 0; it < 200 && (b - a) > 1e-12 * voc; ++it) {
        if (pc > pd) {
            b = d;
            d = c;
            pd = pc;
            c = b - gr * (b - a);
            pc = p_of(c);
        } else {
            a = c;
            c = d;
            pc = pd;
            d = a + gr * (b - a);
            pd = p_of(d);
        }
    }
    MaxPowerPoint mpp;
    mpp.v = 0.5 * (a + b);
    mpp.i_ma = model.current_ma(mpp.v, p_mw);
    mpp.p_mw = mpp.v * mpp.i_ma;
    mpp.efficiency = mpp.p_mw / p_mw;
    return mpp;
}

OperatingPoint operating_point(const PVModel& model, double p_mw, const Load& load) {
    OperatingPoint op;
    if (load.kind == Load::Kind::Resistive) {
        if (load.value <= 0.0) { // short circuit
            op.v = 0.0;
            op.i_ma = std::max(0.0, model.current_ma(0.0, p_mw));
            op.p_mw = 0.0;
            return op;
        }
        if (std::isinf(load.value)) { // open circuit
            op.v = model.v_oc(p_mw);
            op.i_ma = 0.0;
            op.p_mw = 0.0;
            return op;
        }
        // f(V) = I_cell(V) - V/R is strictly decreasing; bisect on [0, Voc].
        const double voc = model.v_oc(p_mw);
        double lo = 0.0, hi = std::max(voc, 1e-9);
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double f = model.current_ma(mid, p_mw) - mid / load.value;
            (f > 0.0 ? lo : hi) = mid;
        }
        op.v = 0.5 * (lo + hi);
        op.i_ma = op.v / load.value;
        op.p_mw = op.v * op.i_ma;
        return op;
    }
    // Constant-power sink: intersect on the stable branch above the MPP
    // voltage, where the cell can still raise its output to meet the demand.
    const double demand_mw = load.value;
    if (demand_mw <= 0.0) {
        op.v = model.v_oc(p_mw);
        op.i_ma = 0.0;
        op.p_mw = 0.0;
        return op;
    }
    const MaxPowerPoint mpp = max_power_point(model, p_mw);
    if (demand_mw > mpp.p_mw) {
        op.brown_out = true;
        op.v = mpp.v;
        op.i_ma = mpp.i_ma;
        op.p_mw = mpp.p_mw;
        return op;
    }
    double lo = mpp.v, hi = model.v_oc(p_mw);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f = mid * model.current_ma(mid, p_mw) - demand_mw;
        (f > 0.0 ? lo : hi) = mid;
    }
    op.v = 0.5 * (lo + hi);
    op.i_ma = model.current_ma(op.v, p_mw);
    op.p_mw = op.v * op.i_ma;
    return op;
}

double power_for_voltage(const PVModel& model, double load_r_kohm, double v) {
    if (load_r_kohm <= 0.0 || v < 0.0)
        throw ValidationError("power_for_voltage needs positive load and voltage");
    return (v / load_r_kohm + model.i0_ma * std::expm1(v / model.stack_vt())) /
           model.i_ph_per_mw;
}

namespace {

// Static loaded terminal voltage, warm-started Newton iteration with a
// bisection fallback.
double static_voltage(const PVModel& model, double p_mw, double g_load, double v_guess) {
    double v = std::max(0.0, v_guess);
    const double m = model.stack_vt();
    for (int it = 0; it < 8; ++it) {
        const double e = std::exp(v / m);
        const double f = model.i_ph_per_mw * p_mw - model.i0_ma * (e - 1.0) - g_load * v;
        const double df = -model.i0_ma * e / m - g_load;
        const double step = f / df;
        v -= step;
        if (!(v >= 0.0) || !std::isfinite(v))
            break;
        if (std::abs(step) < 1e-12)
            return v;
    }
    // fallback
    double lo = 0.0, hi = std::max(model.v_oc(p_mw), 1e-9);
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f = model.current_ma(mid, p_mw) - g_load * mid;
        (f > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

ElectricalWaveform pv_transient(const PVModel& model, const Waveform& p_in_mw,
                                double load_r_kohm) {
    if (load_r_kohm <= 0.0)
        throw ValidationError("transient load must be positive");
    if (p_in_mw.empty())
        throw ValidationError("empty optical waveform");
    const bool zero_lag = model.tau_rise_ns == 0.0 && model.tau_fall_ns == 0.0;
    if (!zero_lag) {
        const double tau_min = std::min(model.tau_rise_ns, model.tau_fall_ns);
        if (tau_min <= 0.0)
            throw ValidationError("transient time constants must both be set or both zero");
        if (p_in_mw.dt_ns > tau_min / 10.0)
            throw ValidationError("sample period too coarse for the PV time constants");
    }
    const double g = 1.0 / load_r_kohm;
    const double k_rise = zero_lag ? 1.0 : -std::expm1(-p_in_mw.dt_ns / model.tau_rise_ns);
    const double k_fall = zero_lag ? 1.0 : -std::expm1(-p_in_mw.dt_ns / model.tau_fall_ns);

    ElectricalWaveform out;
    out.dt_ns = p_in_mw.dt_ns;
    out.voltage_v.resize(p_in_mw.size());
    out.current_ma.resize(p_in_mw.size());
    double v_target = static_voltage(model, p_in_mw.samples[0], g, 3.0);
    double v = v_target; // start settled at the initial illumination
    for (std::size_t i = 0; i < p_in_mw.size(); ++i) {
        v_target = static_voltage(model, p_in_mw.samples[i], g, v_target);
        const double k = v_target > v ? k_rise : k_fall;
        v += (v_target - v) * k;
        out.voltage_v[i] = v;
        out.current_ma[i] = v * g;
    }
    return out;
}

Waveform photodiode_current(double responsivity_ma_per_mw, const Waveform& p_in_mw,
                            double bandwidth_mhz) {
    if (responsivity_ma_per_mw < 0.0 || bandwidth_mhz <= 0.0)
        throw ValidationError("photodiode parameters out of range");
    const double tau_ns = 1e3 / (2.0 * M_PI * bandwidth_mhz);
    const double k = -std::expm1(-p_in_mw.dt_ns / tau_ns);
    Waveform out;
    out.dt_ns = p_in_mw.dt_ns;
    out.samples.resize(p_in_mw.size());
    double y = p_in_mw.empty() ? 0.0 : responsivity_ma_per_mw * p_in_mw.samples[0];
    for (std::size_t i = 0; i < p_in_mw.size(); ++i) {
        if (p_in_mw.samples[i] < 0.0)
            throw ValidationError("optical power must be >= 0");
        const double x = responsivity_ma_per_mw * p_in_mw.samples[i];
        y += (x - y) * k;
        out.samples[i] = y;
    }
    return out;
}

double InterfaceCircuit::hp_corner_hz() const {
    return 1e15 / (2.0 * M_PI * r_feedback_kohm * c_couple_pf); // kOhm*pF = 1e-9 s
}

namespace {

struct EdgeShaper {
    double tau_rise_ns;
    double tau_fall_ns;
    double y = 0.0;

    double step(double target, double dt_ns) {
        const double tau = target > y ? tau_rise_ns : tau_fall_ns;
        y += (target - y) * -std::expm1(-dt_ns / tau);
        return y;
    }
};

} // namespace

InterfaceTrace interface_digitize(const InterfaceCircuit& circ, const Waveform& i_pd_ma,
                                  const Waveform& supply_v) {
    if (circ.schmitt_high_v <= circ.schmitt_low_v)
        throw ValidationError("Schmitt hysteresis window must be positive");
    if (supply_v.size() != i_pd_ma.size() || supply_v.dt_ns != i_pd_ma.dt_ns)
        throw ValidationError("supply and photocurrent waveforms must share a time base");

    const double dt = i_pd_ma.dt_ns;
    const double tau_hp_ns = circ.r_feedback_kohm * circ.c_couple_pf; // kOhm*pF = ns
    const double a_hp = tau_hp_ns / (tau_hp_ns + dt);
    // 10-90% edge of a single pole spans ln(9) time constants
    const double log9 = std::log(9.0);
    EdgeShaper out_p{circ.out_rise_ns / log9, circ.out_fall_ns / log9};
    EdgeShaper out_n{circ.out_rise_ns / log9, circ.out_fall_ns / log9};

    InterfaceTrace trace;
    trace.sense_v.dt_ns = dt;
    trace.sense_v.samples.resize(i_pd_ma.size());
    trace.pair.p.dt_ns = dt;
    trace.pair.n.dt_ns = dt;
    trace.pair.p.samples.resize(i_pd_ma.size());
    trace.pair.n.samples.resize(i_pd_ma.size());

    bool state = false;
    double hp = 0.0;
    double x_prev = i_pd_ma.empty() ? 0.0 : i_pd_ma.samples[0] * circ.r_sense_kohm;
    for (std::size_t i = 0; i < i_pd_ma.size(); ++i) {
        const double v_sense = i_pd_ma.samples[i] * circ.r_sense_kohm;
        trace.sense_v.samples[i] = v_sense;
        hp = a_hp * (hp + v_sense - x_prev);
        x_prev = v_sense;
        if (hp > circ.schmitt_high_v)
            state = true;
        else if (hp < circ.schmitt_low_v)
            state = false;
        const double rail = supply_v.samples[i];
        const bool powered = rail >= circ.min_supply_v;
        const double hi = powered ? rail : 0.0;
        trace.pair.p.samples[i] = out_p.step(powered && state ? hi : 0.0, dt);
        trace.pair.n.samples[i] = out_n.step(powered && !state ? hi : 0.0, dt);
    }
    return trace;
}

InterfaceTrace interface_digitize(const InterfaceCircuit& circ, const Waveform& i_pd_ma,
                                  double supply_v) {
    Waveform supply;
    supply.dt_ns = i_pd_ma.dt_ns;
    supply.samples.assign(i_pd_ma.size(), supply_v);
    return interface_digitize(circ, i_pd_ma, supply);
}

double interface_quiescent_power(const InterfaceCircuit& circ, double supply_v) {
    if (supply_v < 0.0)
        throw ValidationError("supply voltage must be >= 0");
    return circ.quiescent_ma * supply_v; // mA * V = mW
}

} // namespace retisim::analog
