#include "retisim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace retisim::harness {

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

namespace {

constexpr double kCalibrationLambdaNm = 852.0; // bench wavelength of the PV fit

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\')
            out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

telemetry::Frame to_frame(const Command& cmd, const asic::DacModel& dac) {
    telemetry::Frame f;
    if (std::holds_alternative<CmdSetRole>(cmd)) {
        const auto& c = std::get<CmdSetRole>(cmd);
        f.opcode = asic::kOpSetElectrodeRole;
        f.payload = {static_cast<std::uint8_t>(c.electrode),
                     static_cast<std::uint8_t>(c.role)};
    } else if (std::holds_alternative<CmdSetWaveform>(cmd)) {
        const auto& p = std::get<CmdSetWaveform>(cmd).params;
        f.opcode = asic::kOpSetWaveform;
        auto u16 = [](double us) {
            const long v = std::lround(us);
            return std::clamp<long>(v, 0, 0xFFFF);
        };
        const long p1 = u16(p.phase1_us), gap = u16(p.interphase_us), p2 = u16(p.phase2_us);
        std::uint8_t flags = 0;
        if (p.polarity == asic::Polarity::AnodicFirst)
            flags |= 1;
        if (p.shape == asic::PulseShape::Monophasic)
            flags |= 2;
        f.payload = {static_cast<std::uint8_t>(dac.quantize(p.amplitude_ua)),
                     static_cast<std::uint8_t>(p1 >> 8), static_cast<std::uint8_t>(p1 & 0xFF),
                     static_cast<std::uint8_t>(gap >> 8), static_cast<std::uint8_t>(gap & 0xFF),
                     static_cast<std::uint8_t>(p2 >> 8), static_cast<std::uint8_t>(p2 & 0xFF),
                     flags};
    } else if (std::holds_alternative<CmdTrigger>(cmd)) {
        f.opcode = asic::kOpTrigger;
    } else if (std::holds_alternative<CmdDisableAll>(cmd)) {
        f.opcode = asic::kOpDisableAll;
    } else {
        f.opcode = asic::kOpQueryStatus;
    }
    return f;
}

const char* opcode_name(std::uint8_t opcode) {
    switch (opcode) {
    case asic::kOpSetElectrodeRole: return "set_role";
    case asic::kOpSetWaveform: return "set_waveform";
    case asic::kOpTrigger: return "trigger";
    case asic::kOpDisableAll: return "disable_all";
    case asic::kOpQueryStatus: return "query_status";
    case asic::kOpPowerOnReset: return "por";
    case asic::kOpAck: return "ack";
    case asic::kOpNack: return "nack";
    case asic::kOpStatus: return "status";
    }
    return "unknown";
}

struct BitTimeline {
    telemetry::BitStream bits;
    std::vector<std::pair<std::size_t, std::size_t>> frame_spans; // [start, end) bit
};

void append_idle(std::vector<std::uint8_t>& bits, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i)
        bits.push_back(bits.size() % 2 == 0 ? 1 : 0);
}

BitTimeline build_timeline(const Scenario& s, const asic::DacModel& dac) {
    BitTimeline tl;
    tl.bits.bitrate_kbps = s.bitrate_kbps;
    auto& bits = tl.bits.bits;
    const double bit_period_us = 1e3 / s.bitrate_kbps;
    append_idle(bits, static_cast<std::size_t>(s.idle_head_bits));
    for (const auto& entry : s.script) {
        if (entry.at_us) {
            const auto target =
                static_cast<std::size_t>(std::ceil(*entry.at_us / bit_period_us));
            if (target > bits.size())
                append_idle(bits, target - bits.size());
        }
        const auto frame_bits = telemetry::frame_encode(to_frame(entry.cmd, dac));
        tl.frame_spans.emplace_back(bits.size(), bits.size() + frame_bits.bits.size());
        bits.insert(bits.end(), frame_bits.bits.begin(), frame_bits.bits.end());
        append_idle(bits, 4); // inter-frame turnaround
    }
    append_idle(bits, static_cast<std::size_t>(s.idle_tail_bits));
    const auto margin_bits =
        static_cast<std::size_t>(std::ceil(s.tail_margin_us / bit_period_us));
    append_idle(bits, margin_bits);
    return tl;
}

void add_noise(Waveform& w, double rms_mw, std::uint64_t seed) {
    if (rms_mw <= 0.0)
        return;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, rms_mw);
    for (double& x : w.samples)
        x = std::max(0.0, x + dist(rng));
}

std::string waveform_csv(const Waveform& w, const char* value_header,
                         double t_offset_ns = 0.0) {
    std::string out = "time_ns,";
    out += value_header;
    out += "\n";
    char buf[80];
    for (std::size_t i = 0; i < w.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g\n", t_offset_ns + w.time_ns(i),
                      w.samples[i]);
        out += buf;
    }
    return out;
}

std::string electrical_csv(const ElectricalWaveform& w) {
    std::string out = "time_ns,voltage_v,current_ma\n";
    char buf[120];
    for (std::size_t i = 0; i < w.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g\n",
                      w.dt_ns * static_cast<double>(i), w.voltage_v[i], w.current_ma[i]);
        out += buf;
    }
    return out;
}

std::string pulse_csv(const asic::PulseResult& p) {
    std::string out = "time_ns,current_ua,voltage_v\n";
    char buf[120];
    for (std::size_t i = 0; i < p.current_ua.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g\n",
                      p.t_start_us * 1e3 + p.current_ua.time_ns(i),
                      p.current_ua.samples[i], p.voltage_v.samples[i]);
        out += buf;
    }
    return out;
}

std::string clock_edges_csv(const std::vector<double>& edges) {
    std::string out = "edge_ns\n";
    for (double e : edges)
        out += fmt(e) + "\n";
    return out;
}

std::string events_json(const TraceBundle& b) {
    std::ostringstream out;
    out << "{\n  \"schema_version\": 1,\n";
    out << "  \"scenario\": \"" << json_escape(b.scenario_name) << "\",\n";
    out << "  \"recovered_bitrate_kbps\": " << fmt(b.recovered_bitrate_kbps) << ",\n";
    out << "  \"por_latency_us\": " << fmt(b.por_latency_us) << ",\n";
    out << "  \"ber\": {\"errors\": " << b.ber.errors << ", \"compared\": " << b.ber.compared
        << ", \"ber\": " << fmt(b.ber.ber) << "},\n";
    out << "  \"bundle_hash\": \"" << std::hex << b.bundle_hash << std::dec << "\",\n";
    out << "  \"events\": [\n";
    for (std::size_t i = 0; i < b.events.size(); ++i) {
        const auto& e = b.events[i];
        out << "    {\"t_us\": " << fmt(e.t_us) << ", \"kind\": \"" << json_escape(e.kind)
            << "\", \"detail\": \"" << json_escape(e.detail) << "\"}"
            << (i + 1 < b.events.size() ? ",\n" : "\n");
    }
    out << "  ]\n}\n";
    return out.str();
}

// Serialised form of every artefact in the bundle, used both for the bundle
// hash and for emission, so reruns and re-emits are byte-identical.
std::vector<std::pair<std::string, std::string>> serialize(const TraceBundle& b) {
    std::vector<std::pair<std::string, std::string>> files;
    files.emplace_back("optical_pupil.csv", waveform_csv(b.optical_pupil_mw, "power_mw"));
    files.emplace_back("optical_cell.csv", waveform_csv(b.optical_cell_mw, "power_mw"));
    files.emplace_back("pv.csv", electrical_csv(b.pv));
    files.emplace_back("sense.csv", waveform_csv(b.sense_v, "voltage_v"));
    files.emplace_back("pair_p.csv", waveform_csv(b.pair.p, "voltage_v"));
    files.emplace_back("pair_n.csv", waveform_csv(b.pair.n, "voltage_v"));
    files.emplace_back("dc_rail.csv", waveform_csv(b.dc_rail_v, "voltage_v"));
    files.emplace_back("clock_edges.csv", clock_edges_csv(b.clock_edges_ns));
    for (const auto& p : b.pulses) {
        char name[64];
        std::snprintf(name, sizeof name, "electrode_%03d_pulse.csv", p.electrode);
        files.emplace_back(name, pulse_csv(p));
    }
    files.emplace_back("budget.json", budget::to_json(b.budget));
    return files;
}

} // namespace

TraceBundle run_end_to_end(const Scenario& s) {
    s.validate();
    const auto& spec_model = spectral::SpectralModel::defaults();
    const analog::PVModel pv_model = analog::PVModel::calibrated();
    const analog::InterfaceCircuit circ;
    const asic::DacModel dac;

    TraceBundle bundle;
    bundle.scenario_name = s.name;
    bundle.dt_ns = s.time_step_ns;

    // transmit side
    const BitTimeline tl = build_timeline(s, dac);
    const auto symbols = telemetry::manchester_encode(tl.bits);
    telemetry::AskParams ask;
    ask.p_high_mw = s.p_pupil_high_mw;
    ask.p_low_mw = s.p_pupil_low_mw;
    ask.edge_time_ns = s.edge_time_ns;
    ask.sample_period_ns = s.time_step_ns;
    bundle.optical_pupil_mw = telemetry::ask_modulate(symbols, ask);
    add_noise(bundle.optical_pupil_mw, s.noise_mw_rms, s.seed);

    // through the eye onto the cell
    const double t_eye = spectral::eye_transmission(spec_model, s.lambda_nm);
    bundle.optical_cell_mw = bundle.optical_pupil_mw;
    for (double& x : bundle.optical_cell_mw.samples)
        x *= t_eye;

    // energy branch; the photocurrent scale is calibrated at the bench
    // wavelength, other wavelengths scale with the relative conversion
    // efficiency so the cell dies past the bandgap
    const double eqe_rel = spectral::pv_eqe_scaled(spec_model.stack, s.lambda_nm) /
                           spectral::pv_eqe_scaled(spec_model.stack, kCalibrationLambdaNm);
    Waveform pv_drive = bundle.optical_cell_mw;
    for (double& x : pv_drive.samples)
        x *= eqe_rel;
    bundle.pv = analog::pv_transient(pv_model, pv_drive, analog::nominal_dc_load_kohm());

    // data branch
    Waveform pd_in = bundle.optical_cell_mw;
    for (double& x : pd_in.samples)
        x *= circ.pd_power_fraction;
    const Waveform i_pd = analog::photodiode_current(circ.responsivity_ma_per_mw, pd_in);
    auto trace = analog::interface_digitize(circ, i_pd, bundle.pv.voltage());
    bundle.sense_v = std::move(trace.sense_v);
    bundle.pair = std::move(trace.pair);

    // stimulator power recovery
    const asic::RailTimeline rails = asic::power_conditioning(bundle.pair);
    bundle.dc_rail_v = rails.dc_v;

    // stimulator data recovery
    Waveform diff;
    diff.dt_ns = bundle.pair.p.dt_ns;
    diff.samples.resize(bundle.pair.p.size());
    for (std::size_t i = 0; i < diff.size(); ++i)
        diff.samples[i] = bundle.pair.p.samples[i] - bundle.pair.n.samples[i];
    auto decoded = telemetry::manchester_decode(diff, s.bitrate_kbps, 0.0);
    bundle.clock_edges_ns = decoded.clock_edges_ns;
    bundle.recovered_bitrate_kbps = decoded.recovered_bitrate_kbps;

    // clock lock once a handful of consecutive bits have resolved
    std::optional<double> t_lock_ns;
    if (decoded.clock_edges_ns.size() >= 8)
        t_lock_ns = decoded.clock_edges_ns[7];

    // chronological walk over power and command events
    asic::StimulatorAsic chip;
    chip.set_compliance_v(3.3);
    for (int i = 0; i < asic::kElectrodeCount; ++i)
        chip.set_electrode_load(i, s.electrode_load);

    struct TimedEvent {
        double t_ns;
        int kind; // 0 = rail transition, 1 = clock lock, 2 = frame
        std::size_t index;
    };
    std::vector<TimedEvent> timed;
    for (std::size_t i = 0; i < rails.transitions_ns.size(); ++i)
        timed.push_back({rails.transitions_ns[i].first, 0, i});
    if (t_lock_ns)
        timed.push_back({*t_lock_ns, 1, 0});
    const auto scanned = telemetry::scan_frames(decoded.bits);
    for (std::size_t i = 0; i < scanned.size(); ++i) {
        if (scanned[i].end_bit - 1 < decoded.clock_edges_ns.size())
            timed.push_back({decoded.clock_edges_ns[scanned[i].end_bit - 1], 2, i});
    }
    std::stable_sort(timed.begin(), timed.end(),
                     [](const TimedEvent& a, const TimedEvent& b) { return a.t_ns < b.t_ns; });

    auto dc_at = [&](double t_ns) {
        if (rails.dc_v.empty())
            return 0.0;
        const auto idx = std::min<std::size_t>(
            rails.dc_v.size() - 1,
            static_cast<std::size_t>(std::max(0.0, t_ns / rails.dc_v.dt_ns)));
        return rails.dc_v.samples[idx];
    };
    bool clock_locked = false;
    auto note_por = [&](std::optional<telemetry::Frame> por, double t_ns) {
        if (!por)
            return;
        bundle.events.push_back({t_ns * 1e-3, "por", telemetry::bits_to_hex(
                                                         telemetry::frame_encode(*por))});
        bundle.por_latency_us = t_ns * 1e-3;
    };
    for (const auto& ev : timed) {
        switch (ev.kind) {
        case 0: {
            const bool up = rails.transitions_ns[ev.index].second;
            bundle.events.push_back({ev.t_ns * 1e-3, up ? "rails_up" : "rails_down",
                                     "dc=" + fmt(dc_at(ev.t_ns))});
            note_por(chip.update_power(dc_at(ev.t_ns), clock_locked), ev.t_ns);
            break;
        }
        case 1: {
            clock_locked = true;
            bundle.events.push_back({ev.t_ns * 1e-3, "clock_lock",
                                     "bitrate_kbps=" + fmt(decoded.recovered_bitrate_kbps)});
            note_por(chip.update_power(dc_at(ev.t_ns), clock_locked), ev.t_ns);
            break;
        }
        case 2: {
            const auto& sf = scanned[ev.index];
            const double t_us = ev.t_ns * 1e-3;
            if (!sf.result.ok()) {
                bundle.events.push_back(
                    {t_us, "frame_error", telemetry::frame_error_name(sf.result.error)});
                break;
            }
            const auto& frame = *sf.result.frame;
            auto res = chip.apply_command(frame);
            std::string detail = opcode_name(frame.opcode);
            if (res.accepted) {
                detail += " -> ack";
            } else {
                detail += " -> nack(";
                detail += std::to_string(static_cast<int>(*res.nack));
                detail += ")";
            }
            bundle.events.push_back({t_us, res.accepted ? "ack" : "nack", detail});
            if (res.reply && res.reply->opcode == asic::kOpStatus)
                bundle.events.push_back({t_us, "status",
                                         telemetry::bits_to_hex(
                                             telemetry::frame_encode(*res.reply))});
            for (auto& pulse : res.pulses) {
                pulse.t_start_us = t_us;
                bundle.events.push_back(
                    {t_us, "pulse",
                     "electrode=" + std::to_string(pulse.electrode) +
                         " plateau_v=" + fmt(pulse.plateau_v) +
                         " charge_nc=" + fmt(pulse.net_charge_nc) +
                         (pulse.compliance_limited ? " compliance_limited" : "")});
                bundle.pulses.push_back(std::move(pulse));
            }
            break;
        }
        }
    }

    // link quality over the whole run
    if (!decoded.bits.empty()) {
        telemetry::BitStream rx{decoded.bits, s.bitrate_kbps};
        bundle.ber = telemetry::ber_measure(tl.bits, rx);
    } else {
        bundle.ber.compared = 0;
        bundle.ber.errors = 0;
        bundle.ber.ber = 1.0;
    }

    bundle.budget = budget::power_chain(spec_model, budget::BudgetConfig{},
                                        s.p_pupil_mean_mw(), s.lambda_nm);

    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& [name, content] : serialize(bundle)) {
        h = fnv1a64(name.data(), name.size(), h);
        h = fnv1a64(content.data(), content.size(), h);
    }
    bundle.bundle_hash = h;
    return bundle;
}

SweepTable sweep(const Scenario& base, const std::string& param,
                 const std::vector<double>& values) {
    static const std::vector<std::string> registered = {
        "lambda_nm", "p_pupil_mw", "bitrate_kbps", "mod_depth_mw", "load_r_kohm"};
    if (std::find(registered.begin(), registered.end(), param) == registered.end())
        throw ValidationError("unknown sweep parameter: " + param);

    SweepTable table;
    table.param = param;
    for (double v : values) {
        Scenario s = base;
        const double mean = base.p_pupil_mean_mw();
        if (param == "lambda_nm") {
            s.lambda_nm = v;
        } else if (param == "p_pupil_mw") {
            const double ratio = v / mean;
            s.p_pupil_high_mw = base.p_pupil_high_mw * ratio;
            s.p_pupil_low_mw = base.p_pupil_low_mw * ratio;
        } else if (param == "bitrate_kbps") {
            s.bitrate_kbps = v;
        } else if (param == "mod_depth_mw") {
            s.p_pupil_high_mw = mean + 0.5 * v;
            s.p_pupil_low_mw = mean - 0.5 * v;
        } else if (param == "load_r_kohm") {
            s.electrode_load = asic::ResistiveLoad{v};
        }
        const TraceBundle b = run_end_to_end(s);
        SweepRow row;
        row.value = v;
        row.capacity_mw = spectral::power_delivery_capacity(s.lambda_nm);
        row.ber = b.ber.ber;
        row.por_latency_us = b.por_latency_us;
        const double p_cell = s.p_pupil_mean_mw() *
                              spectral::eye_transmission(s.lambda_nm);
        if (p_cell > 0.0)
            row.p_mpp_mw = analog::max_power_point(analog::PVModel::calibrated(), p_cell).p_mw;
        row.p_electrical_mw = b.budget.p_electrical_mw;
        row.safety_margin_mw = b.budget.safety_margin_mw;
        row.p_dissipated_mw = b.budget.p_dissipated_mw;
        row.verdict_pass = budget::verdict(b.budget).pass;
        table.rows.push_back(row);
    }
    return table;
}

std::string to_csv(const SweepTable& table) {
    std::string out = table.param +
                      ",capacity_mw,ber,por_latency_us,p_mpp_mw,p_electrical_mw,"
                      "safety_margin_mw,p_dissipated_mw,verdict\n";
    for (const auto& r : table.rows) {
        out += fmt(r.value) + "," + fmt(r.capacity_mw) + "," + fmt(r.ber) + "," +
               fmt(r.por_latency_us) + "," + fmt(r.p_mpp_mw) + "," +
               fmt(r.p_electrical_mw) + "," + fmt(r.safety_margin_mw) + "," +
               fmt(r.p_dissipated_mw) + "," + (r.verdict_pass ? "pass" : "fail") + "\n";
    }
    return out;
}

std::string to_json(const SweepTable& table) {
    std::ostringstream out;
    out << "{\n  \"schema_version\": 1,\n  \"param\": \"" << json_escape(table.param)
        << "\",\n  \"rows\": [\n";
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& r = table.rows[i];
        out << "    {\"value\": " << fmt(r.value) << ", \"capacity_mw\": " << fmt(r.capacity_mw)
            << ", \"ber\": " << fmt(r.ber) << ", \"por_latency_us\": " << fmt(r.por_latency_us)
            << ", \"p_mpp_mw\": " << fmt(r.p_mpp_mw)
            << ", \"p_electrical_mw\": " << fmt(r.p_electrical_mw)
            << ", \"safety_margin_mw\": " << fmt(r.safety_margin_mw)
            << ", \"p_dissipated_mw\": " << fmt(r.p_dissipated_mw)
            << ", \"verdict\": " << (r.verdict_pass ? "true" : "false") << "}"
            << (i + 1 < table.rows.size() ? ",\n" : "\n");
    }
    out << "  ]\n}\n";
    return out.str();
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ValidationError("cannot write output file: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out)
        throw ValidationError("short write to output file: " + path.string());
}

} // namespace

std::vector<std::string> emit(const TraceBundle& bundle, const std::string& output_dir) {
    std::filesystem::path dir(output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw ValidationError("cannot create output directory " + output_dir + ": " +
                              ec.message());
    auto files = serialize(bundle);
    files.emplace_back("events.json", events_json(bundle));

    std::vector<std::string> written;
    std::ostringstream manifest;
    manifest << "{\n  \"schema_version\": 1,\n  \"scenario\": \""
             << json_escape(bundle.scenario_name) << "\",\n  \"bundle_hash\": \"" << std::hex
             << bundle.bundle_hash << std::dec << "\",\n  \"files\": [\n";
    for (std::size_t i = 0; i < files.size(); ++i) {
        const auto& [name, content] = files[i];
        write_file(dir / name, content);
        written.push_back((dir / name).string());
        manifest << "    {\"name\": \"" << json_escape(name) << "\", \"bytes\": "
                 << content.size() << ", \"fnv1a64\": \"" << std::hex
                 << fnv1a64(content.data(), content.size()) << std::dec << "\"}"
                 << (i + 1 < files.size() ? ",\n" : "\n");
    }
    manifest << "  ]\n}\n";
    write_file(dir / "manifest.json", manifest.str());
    written.push_back((dir / "manifest.json").string());
    return written;
}

std::string emit(const SweepTable& table, const std::string& output_dir) {
    std::filesystem::path dir(output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw ValidationError("cannot create output directory " + output_dir + ": " +
                              ec.message());
    const auto path = dir / ("sweep_" + table.param + ".csv");
    write_file(path, to_csv(table));
    return path.string();
}

telemetry::BerResult link_ber_run(const std::vector<std::uint8_t>& payload_bits,
                                  const LinkBerConfig& cfg) {
    if (payload_bits.empty())
        throw ValidationError("BER run needs payload bits");
    // head pad locks the receiver and absorbs the AC-coupling settle
    std::vector<std::uint8_t> bits;
    bits.reserve(payload_bits.size() + static_cast<std::size_t>(cfg.head_pad_bits) + 16);
    append_idle(bits, static_cast<std::size_t>(cfg.head_pad_bits));
    bits.insert(bits.end(), payload_bits.begin(), payload_bits.end());
    append_idle(bits, 16);

    const double dt = cfg.dt_ns;
    const double half_ns = 0.5e6 / cfg.bitrate_kbps;
    const analog::InterfaceCircuit circ;
    const double tau_ask = cfg.edge_time_ns / std::log(9.0);
    const double k_ask = -std::expm1(-dt / tau_ask);
    const double tau_pd = 1e3 / (2.0 * M_PI * 3.7);
    const double k_pd = -std::expm1(-dt / tau_pd);
    const double tau_hp = circ.r_feedback_kohm * circ.c_couple_pf;
    const double a_hp = tau_hp / (tau_hp + dt);

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> noise(0.0, cfg.noise_mw_rms);

    telemetry::ManchesterDecoder decoder(cfg.bitrate_kbps, 0.5);
    const std::size_t n_half = 2 * bits.size();
    const std::size_t n_samples =
        static_cast<std::size_t>(std::ceil(n_half * half_ns / dt));

    constexpr std::size_t kChunk = 1 << 16;
    std::vector<double> chunk;
    chunk.reserve(kChunk);

    double y_ask = 0.0;
    bool primed = false;
    double y_pd = 0.0;
    double hp = 0.0;
    double x_prev = 0.0;
    bool state = false;
    const double gain = circ.responsivity_ma_per_mw * circ.pd_power_fraction *
                        circ.r_sense_kohm;
    const bool powered = cfg.supply_v >= circ.min_supply_v;

    for (std::size_t i = 0; i < n_samples; ++i) {
        const double t_ns = static_cast<double>(i) * dt;
        std::size_t half_idx = static_cast<std::size_t>(t_ns / half_ns);
        half_idx = std::min(half_idx, n_half - 1);
        const std::size_t bit = half_idx / 2;
        const bool second_half = half_idx % 2 == 1;
        const bool high = bits[bit] ? second_half : !second_half;
        double target = high ? cfg.p_high_mw : cfg.p_low_mw;
        if (cfg.noise_mw_rms > 0.0)
            target = std::max(0.0, target + noise(rng));
        if (!primed) {
            y_ask = target;
            y_pd = target;
            x_prev = target * gain;
            primed = true;
        }
        y_ask += (target - y_ask) * k_ask;
        y_pd += (y_ask - y_pd) * k_pd;
        const double v_sense = y_pd * gain;
        hp = a_hp * (hp + v_sense - x_prev);
        x_prev = v_sense;
        if (hp > circ.schmitt_high_v)
            state = true;
        else if (hp < circ.schmitt_low_v)
            state = false;
        chunk.push_back(powered && state ? 1.0 : 0.0);
        if (chunk.size() == kChunk) {
            decoder.feed(chunk.data(), chunk.size(), dt);
            chunk.clear();
        }
    }
    if (!chunk.empty())
        decoder.feed(chunk.data(), chunk.size(), dt);
    auto decoded = decoder.finish();

    telemetry::BitStream tx{payload_bits, cfg.bitrate_kbps};
    telemetry::BitStream rx{std::move(decoded.bits), cfg.bitrate_kbps};
    return telemetry::ber_measure(tx, rx);
}

} // namespace retisim::harness
