#include "retisim/asic.hpp"

#include <cmath>
#include <cstring>

namespace retisim::asic {

int DacModel::quantize(double amplitude_ua) const {
    const int code = static_cast<int>(std::lround(amplitude_ua / lsb_ua()));
    return std::clamp(code, 0, codes - 1);
}

double DacModel::actual_ua(double amplitude_ua) const {
    const double programmed = quantize(amplitude_ua) * lsb_ua();
    return programmed * (1.0 + gain_error) + offset_ua;
}

RandlesLoad RandlesLoad::calibrated(double r_s_kohm, double r_ct_kohm,
                                    double target_kohm_at_1khz) {
    if (target_kohm_at_1khz <= r_s_kohm)
        throw ValidationError("target impedance below the series resistance");
    RandlesLoad load{r_s_kohm, r_ct_kohm, 0.0};
    double lo = 0.01, hi = 1e5; // |Z| decreases monotonically with C
    for (int it = 0; it < 200; ++it) {
        load.c_dl_nf = std::sqrt(lo * hi);
        (load.impedance_kohm(1000.0) > target_kohm_at_1khz ? lo : hi) = load.c_dl_nf;
    }
    return load;
}

double RandlesLoad::impedance_kohm(double f_hz) const {
    // kOhm * nF = us, so express omega in rad/us
    const double w_us = 2.0 * M_PI * f_hz * 1e-6;
    const double x = w_us * r_ct_kohm * c_dl_nf;
    const double re = r_s_kohm + r_ct_kohm / (1.0 + x * x);
    const double im = r_ct_kohm * x / (1.0 + x * x);
    return std::hypot(re, im);
}

bool RailTimeline::rails_up_at(double t_ns) const {
    bool up = false;
    for (const auto& [t, state] : transitions_ns) {
        if (t > t_ns)
            break;
        up = state;
    }
    return up;
}

std::optional<double> RailTimeline::first_up_ns() const {
    for (const auto& [t, state] : transitions_ns)
        if (state)
            return t;
    return std::nullopt;
}

RailTimeline power_conditioning(const DifferentialPair& v_diff, double smoothing_tau_ns) {
    if (v_diff.p.size() != v_diff.n.size() || v_diff.p.dt_ns != v_diff.n.dt_ns)
        throw ValidationError("differential pair halves must share a time base");
    if (smoothing_tau_ns <= 0.0)
        throw ValidationError("smoothing time constant must be positive");
    const double dt = v_diff.p.dt_ns;
    const double k = -std::expm1(-dt / smoothing_tau_ns);

    RailTimeline timeline;
    timeline.dc_v.dt_ns = dt;
    timeline.dc_v.samples.resize(v_diff.p.size());
    double dc = 0.0;
    bool up = false;
    for (std::size_t i = 0; i < v_diff.p.size(); ++i) {
        const double rectified = std::abs(v_diff.p.samples[i] - v_diff.n.samples[i]);
        dc += (rectified - dc) * k;
        timeline.dc_v.samples[i] = dc;
        const bool next = up ? dc >= kRailThresholdV - kRailHysteresisV
                             : dc >= kRailThresholdV;
        if (next != up) {
            up = next;
            timeline.transitions_ns.emplace_back(timeline.dc_v.time_ns(i), up);
        }
    }
    timeline.rails_up_at_end = up;
    return timeline;
}

telemetry::Frame por_frame() {
    // opcode 0xF0, payload: protocol version, rail code (analog dV in
    // decivolts, digital in decivolts)
    return telemetry::Frame{kOpPowerOnReset, {0x01, 30, 10}};
}

Waveform generate_pulse(const StimParams& p, const DacModel& dac) {
    if (p.amplitude_ua < 0.0 || p.amplitude_ua > dac.full_scale_ua)
        throw ValidationError("amplitude outside the DAC range");
    if (p.phase1_us < 0.0 || p.interphase_us < 0.0 || p.phase2_us < 0.0)
        throw ValidationError("phase durations must be >= 0");
    const double amp = dac.actual_ua(p.amplitude_ua);
    const double lead = p.polarity == Polarity::CathodicFirst ? -1.0 : 1.0;

    auto ticks = [](double us) {
        return static_cast<std::size_t>(std::lround(us / kTickUs));
    };
    const std::size_t n1 = ticks(p.phase1_us);
    const std::size_t gap = p.shape == PulseShape::Biphasic ? ticks(p.interphase_us) : 0;
    const std::size_t n2 = p.shape == PulseShape::Biphasic ? ticks(p.phase2_us) : 0;

    Waveform out;
    out.dt_ns = kTickUs * 1e3;
    out.samples.reserve(n1 + gap + n2 + 2);
    for (std::size_t i = 0; i < n1; ++i)
        out.samples.push_back(lead * amp);
    for (std::size_t i = 0; i < gap; ++i)
        out.samples.push_back(0.0);
    for (std::size_t i = 0; i < n2; ++i)
        out.samples.push_back(-lead * amp);
    out.samples.push_back(0.0); // return to rest
    return out;
}

namespace {

struct RandlesIntegrator {
    const RandlesLoad& load;
    double v_c_mv = 0.0; // across the charge-transfer branch

    double step(double i_ua, double dt_us) {
        const double tau_us = load.r_ct_kohm * load.c_dl_nf;
        const double decay = std::exp(-dt_us / tau_us);
        v_c_mv = v_c_mv * decay + i_ua * load.r_ct_kohm * (1.0 - decay);
        return (i_ua * load.r_s_kohm + v_c_mv) * 1e-3; // mV -> V
    }
};

} // namespace

Waveform electrode_voltage(const Waveform& i_ua, const ElectrodeLoad& load) {
    Waveform out;
    out.dt_ns = i_ua.dt_ns;
    out.samples.resize(i_ua.size());
    if (std::holds_alternative<ResistiveLoad>(load)) {
        const double r = std::get<ResistiveLoad>(load).r_kohm;
        for (std::size_t i = 0; i < i_ua.size(); ++i)
            out.samples[i] = i_ua.samples[i] * r * 1e-3; // uA * kOhm = mV
        return out;
    }
    RandlesIntegrator integ{std::get<RandlesLoad>(load)};
    const double dt_us = i_ua.dt_ns * 1e-3;
    for (std::size_t i = 0; i < i_ua.size(); ++i)
        out.samples[i] = integ.step(i_ua.samples[i], dt_us);
    return out;
}

PulseResult drive_electrode(int electrode, const StimParams& p, const DacModel& dac,
                            const ElectrodeLoad& load, double compliance_v) {
    PulseResult res;
    res.electrode = electrode;
    res.current_ua = generate_pulse(p, dac);
    res.voltage_v.dt_ns = res.current_ua.dt_ns;
    res.voltage_v.samples.resize(res.current_ua.size());

    const double dt_us = res.current_ua.dt_ns * 1e-3;
    RandlesIntegrator integ{std::holds_alternative<RandlesLoad>(load)
                                ? std::get<RandlesLoad>(load)
                                : RandlesLoad{}};
    const bool randles = std::holds_alternative<RandlesLoad>(load);
    const double r_res = randles ? 0.0 : std::get<ResistiveLoad>(load).r_kohm;
    for (std::size_t i = 0; i < res.current_ua.size(); ++i) {
        double i_ua = res.current_ua.samples[i];
        double v;
        if (randles) {
            // clamp against the series drop; the double layer keeps its state
            const double headroom_mv = compliance_v * 1e3 - integ.v_c_mv;
            const double i_max = headroom_mv / integ.load.r_s_kohm;
            if (std::abs(i_ua) > std::abs(i_max) && i_ua * i_max > 0.0) {
                i_ua = i_max;
                res.compliance_limited = true;
            }
            v = integ.step(i_ua, dt_us);
        } else {
            v = i_ua * r_res * 1e-3;
            if (std::abs(v) > compliance_v) {
                v = std::copysign(compliance_v, v);
                i_ua = v / r_res * 1e3;
                res.compliance_limited = true;
            }
        }
        res.current_ua.samples[i] = i_ua;
        res.voltage_v.samples[i] = v;
        if (std::abs(v) > std::abs(res.plateau_v))
            res.plateau_v = v;
    }
    res.plateau_v = std::abs(res.plateau_v);
    res.net_charge_nc = charge_balance(res.current_ua);
    return res;
}

double charge_balance(const Waveform& i_ua) {
    double sum_ua = 0.0;
    for (double i : i_ua.samples)
        sum_ua += i;
    return sum_ua * i_ua.dt_ns * 1e-6; // uA * ns = fC; 1e-6 fC = nC
}

SchedulePlan frame_schedule(const std::vector<StimParams>& pulses, double refresh_hz) {
    if (refresh_hz <= 0.0 || refresh_hz > kMaxRefreshHz)
        throw ValidationError("refresh rate must lie in (0, 60] Hz");
    SchedulePlan plan;
    plan.period_us = 1e6 / refresh_hz;
    for (const auto& p : pulses) {
        const double total = p.phase1_us +
                             (p.shape == PulseShape::Biphasic
                                  ? p.interphase_us + p.phase2_us
                                  : 0.0);
        plan.required_us = std::max(plan.required_us, total);
    }
    plan.feasible = plan.required_us <= plan.period_us;
    return plan;
}

StimulatorAsic::StimulatorAsic() = default;

std::optional<telemetry::Frame> StimulatorAsic::update_power(double dc_v, bool clock_locked) {
    clock_locked_ = clock_locked;
    const bool was_up = rails_up_;
    if (!rails_up_ && dc_v >= kRailThresholdV)
        rails_up_ = true;
    else if (rails_up_ && dc_v < kRailThresholdV - kRailHysteresisV)
        rails_up_ = false;

    if (!rails_up_ && was_up) {
        // power cycle: configuration is volatile, POR re-arms
        por_emitted_ = false;
        for (auto& e : electrodes_)
            e.role = ElectrodeRole::Disabled;
        waveform_ = StimParams{};
    }
    if (rails_up_ && clock_locked_ && !por_emitted_) {
        por_emitted_ = true;
        return por_frame();
    }
    return std::nullopt;
}

CommandResult StimulatorAsic::nack(NackReason r) const {
    CommandResult res;
    res.accepted = false;
    res.nack = r;
    res.reply = telemetry::Frame{kOpNack, {static_cast<std::uint8_t>(r)}};
    return res;
}

CommandResult StimulatorAsic::ack() const {
    CommandResult res;
    res.accepted = true;
    res.reply = telemetry::Frame{kOpAck, {}};
    return res;
}

int StimulatorAsic::count_role(ElectrodeRole r) const {
    int n = 0;
    for (const auto& e : electrodes_)
        n += e.role == r;
    return n;
}

void StimulatorAsic::set_electrode_load(int index, const ElectrodeLoad& load) {
    electrodes_.at(static_cast<std::size_t>(index)).load = load;
}

CommandResult StimulatorAsic::apply_command(const telemetry::Frame& f) {
    if (!rails_up_)
        return nack(NackReason::Unpowered);
    switch (f.opcode) {
    case kOpSetElectrodeRole: {
        if (f.payload.size() != 2)
            return nack(NackReason::BadPayload);
        const int index = f.payload[0];
        if (index >= kElectrodeCount)
            return nack(NackReason::BadElectrodeIndex);
        if (f.payload[1] > 2)
            return nack(NackReason::BadPayload);
        electrodes_[static_cast<std::size_t>(index)].role =
            static_cast<ElectrodeRole>(f.payload[1]);
        return ack();
    }
    case kOpSetWaveform: {
        if (f.payload.size() != 8)
            return nack(NackReason::BadPayload);
        StimParams p;
        p.amplitude_ua = f.payload[0] * dac_.lsb_ua(); // payload carries the DAC code
        p.phase1_us = static_cast<double>((f.payload[1] << 8) | f.payload[2]);
        p.interphase_us = static_cast<double>((f.payload[3] << 8) | f.payload[4]);
        p.phase2_us = static_cast<double>((f.payload[5] << 8) | f.payload[6]);
        const std::uint8_t flags = f.payload[7];
        if (flags > 3)
            return nack(NackReason::BadPayload);
        p.polarity = (flags & 1) ? Polarity::AnodicFirst : Polarity::CathodicFirst;
        p.shape = (flags & 2) ? PulseShape::Monophasic : PulseShape::Biphasic;
        waveform_ = p;
        return ack();
    }
    case kOpTrigger: {
        if (!f.payload.empty())
            return nack(NackReason::BadPayload);
        if (count_role(ElectrodeRole::Active) == 0)
            return nack(NackReason::NoActiveElectrode);
        if (count_role(ElectrodeRole::Return) == 0)
            return nack(NackReason::NoReturnElectrode);
        CommandResult res = ack();
        for (int i = 0; i < kElectrodeCount; ++i) {
            const auto& e = electrodes_[static_cast<std::size_t>(i)];
            if (e.role == ElectrodeRole::Active)
                res.pulses.push_back(
                    drive_electrode(i, waveform_, dac_, e.load, compliance_v_));
        }
        return res;
    }
    case kOpDisableAll: {
        if (!f.payload.empty())
            return nack(NackReason::BadPayload);
        for (auto& e : electrodes_)
            e.role = ElectrodeRole::Disabled;
        return ack();
    }
    case kOpQueryStatus: {
        if (!f.payload.empty())
            return nack(NackReason::BadPayload);
        CommandResult res;
        res.accepted = true;
        res.reply = telemetry::Frame{
            kOpStatus,
            {static_cast<std::uint8_t>(por_emitted_ ? 1 : 0),
             static_cast<std::uint8_t>(count_role(ElectrodeRole::Active)),
             static_cast<std::uint8_t>(count_role(ElectrodeRole::Return)),
             static_cast<std::uint8_t>(temperature_nominal_ ? 0 : 1)}};
        return res;
    }
    default:
        return nack(NackReason::UnknownOpcode);
    }
}

std::uint64_t StimulatorAsic::state_hash() const {
    // FNV-1a over the externally visible state
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xffu;
            h *= 0x100000001b3ull;
        }
    };
    mix(rails_up_);
    mix(por_emitted_);
    for (const auto& e : electrodes_)
        mix(static_cast<std::uint64_t>(e.role));
    auto mixd = [&mix](double d) {
        std::uint64_t v;
        static_assert(sizeof v == sizeof d);
        std::memcpy(&v, &d, sizeof v);
        mix(v);
    };
    mixd(waveform_.amplitude_ua);
    mixd(waveform_.phase1_us);
    mixd(waveform_.interphase_us);
    mixd(waveform_.phase2_us);
    mix(static_cast<std::uint64_t>(waveform_.polarity));
    mix(static_cast<std::uint64_t>(waveform_.shape));
    return h;
}

} // namespace retisim::asic
