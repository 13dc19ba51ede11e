#include "retisim/scenario.hpp"

#include <fstream>
#include <sstream>

namespace retisim::harness {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos)
        return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok)
        out.push_back(tok);
    return out;
}

double parse_num(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("scenario: bad numeric value '" + s + "' for " + key);
    }
}

asic::ElectrodeRole parse_role(const std::string& s) {
    if (s == "active")
        return asic::ElectrodeRole::Active;
    if (s == "return")
        return asic::ElectrodeRole::Return;
    if (s == "disabled")
        return asic::ElectrodeRole::Disabled;
    throw ValidationError("scenario: unknown electrode role '" + s + "'");
}

// Commands use positional words plus key=value arguments, e.g.
//   set_waveform amplitude_ua=250 phase1_us=500 interphase_us=20 phase2_us=500
//                polarity=cathodic shape=biphasic
//   trigger at_us=800
ScriptEntry parse_command(const std::string& text) {
    auto toks = split_ws(text);
    if (toks.empty())
        throw ValidationError("scenario: empty command");
    ScriptEntry entry;
    auto take_kv = [&](const std::string& tok, std::string& key, std::string& val) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos)
            throw ValidationError("scenario: expected key=value, got '" + tok + "'");
        key = tok.substr(0, eq);
        val = tok.substr(eq + 1);
    };
    const std::string& op = toks[0];
    std::vector<std::string> args(toks.begin() + 1, toks.end());
    auto eat_at_us = [&]() {
        std::vector<std::string> rest;
        for (const auto& a : args) {
            if (a.rfind("at_us=", 0) == 0)
                entry.at_us = parse_num(a.substr(6), "at_us");
            else
                rest.push_back(a);
        }
        args = rest;
    };
    eat_at_us();

    if (op == "set_role") {
        if (args.size() != 2)
            throw ValidationError("scenario: set_role needs <electrode> <role>");
        CmdSetRole cmd;
        cmd.electrode = static_cast<int>(parse_num(args[0], "electrode"));
        cmd.role = parse_role(args[1]);
        entry.cmd = cmd;
    } else if (op == "set_waveform") {
        CmdSetWaveform cmd;
        for (const auto& a : args) {
            std::string key, val;
            take_kv(a, key, val);
            if (key == "amplitude_ua")
                cmd.params.amplitude_ua = parse_num(val, key);
            else if (key == "phase1_us")
                cmd.params.phase1_us = parse_num(val, key);
            else if (key == "interphase_us")
                cmd.params.interphase_us = parse_num(val, key);
            else if (key == "phase2_us")
                cmd.params.phase2_us = parse_num(val, key);
            else if (key == "polarity")
                cmd.params.polarity = val == "anodic" ? asic::Polarity::AnodicFirst
                                                      : asic::Polarity::CathodicFirst;
            else if (key == "shape")
                cmd.params.shape = val == "monophasic" ? asic::PulseShape::Monophasic
                                                       : asic::PulseShape::Biphasic;
            else
                throw ValidationError("scenario: unknown set_waveform key '" + key + "'");
        }
        entry.cmd = cmd;
    } else if (op == "trigger") {
        if (!args.empty())
            throw ValidationError("scenario: trigger takes only at_us");
        entry.cmd = CmdTrigger{};
    } else if (op == "disable_all") {
        entry.cmd = CmdDisableAll{};
    } else if (op == "query_status") {
        entry.cmd = CmdQueryStatus{};
    } else {
        throw ValidationError("scenario: unknown command '" + op + "'");
    }
    return entry;
}

} // namespace

void Scenario::validate() const {
    if (!(p_pupil_high_mw > p_pupil_low_mw) || p_pupil_low_mw <= 0.0)
        throw ValidationError("scenario: need p_pupil_high_mw > p_pupil_low_mw > 0");
    if (bitrate_kbps <= 0.0)
        throw ValidationError("scenario: bitrate must be positive");
    if (time_step_ns <= 0.0)
        throw ValidationError("scenario: time step must be positive");
    if (time_step_ns > edge_time_ns / 5.0)
        throw ValidationError("scenario: time step coarser than one fifth of the fastest edge");
    if (noise_mw_rms < 0.0)
        throw ValidationError("scenario: noise level must be >= 0");
    if (idle_head_bits < 16)
        throw ValidationError("scenario: need at least 16 idle head bits for receiver settling");
    if (idle_tail_bits < 0 || tail_margin_us < 0.0)
        throw ValidationError("scenario: tail lengths must be >= 0");
    for (const auto& e : script) {
        if (std::holds_alternative<CmdSetRole>(e.cmd)) {
            const auto& cmd = std::get<CmdSetRole>(e.cmd);
            if (cmd.electrode < 0 || cmd.electrode >= asic::kElectrodeCount)
                throw ValidationError("scenario: electrode index out of range");
        }
        if (e.at_us && *e.at_us < 0.0)
            throw ValidationError("scenario: command times must be >= 0");
    }
    // the spectral model is evaluated at this wavelength across the chain
    if (lambda_nm < 600.0 || lambda_nm > 1050.0)
        throw ValidationError("scenario: wavelength outside the safety-model domain");
}

Scenario Scenario::from_string(const std::string& text, const std::string& origin) {
    Scenario s;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError(origin + ":" + std::to_string(lineno) +
                                  ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "name")
            s.name = value;
        else if (key == "lambda_nm")
            s.lambda_nm = parse_num(value, key);
        else if (key == "p_pupil_high_mw")
            s.p_pupil_high_mw = parse_num(value, key);
        else if (key == "p_pupil_low_mw")
            s.p_pupil_low_mw = parse_num(value, key);
        else if (key == "bitrate_kbps")
            s.bitrate_kbps = parse_num(value, key);
        else if (key == "edge_time_ns")
            s.edge_time_ns = parse_num(value, key);
        else if (key == "time_step_ns")
            s.time_step_ns = parse_num(value, key);
        else if (key == "seed")
            s.seed = static_cast<std::uint64_t>(parse_num(value, key));
        else if (key == "noise_mw_rms")
            s.noise_mw_rms = parse_num(value, key);
        else if (key == "idle_head_bits")
            s.idle_head_bits = static_cast<int>(parse_num(value, key));
        else if (key == "idle_tail_bits")
            s.idle_tail_bits = static_cast<int>(parse_num(value, key));
        else if (key == "tail_margin_us")
            s.tail_margin_us = parse_num(value, key);
        else if (key == "electrode_load") {
            const auto toks = split_ws(value);
            if (toks.size() == 2 && toks[0] == "resistive")
                s.electrode_load = asic::ResistiveLoad{parse_num(toks[1], key)};
            else if (toks.size() == 1 && toks[0] == "randles")
                s.electrode_load = asic::RandlesLoad::calibrated();
            else if (toks.size() == 4 && toks[0] == "randles")
                s.electrode_load = asic::RandlesLoad{parse_num(toks[1], key),
                                                     parse_num(toks[2], key),
                                                     parse_num(toks[3], key)};
            else
                throw ValidationError(
                    "scenario: electrode_load is 'resistive <kohm>' or 'randles [rs rct cdl]'");
        } else if (key == "command")
            s.script.push_back(parse_command(value));
        else
            throw ValidationError(origin + ":" + std::to_string(lineno) +
                                  ": unknown scenario key '" + key + "'");
    }
    s.validate();
    return s;
}

Scenario Scenario::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str(), path);
}

Scenario Scenario::paper_nominal() {
    Scenario s;
    s.name = "paper-nominal";
    s.lambda_nm = 852.0;
    s.p_pupil_high_mw = 35.0;
    s.p_pupil_low_mw = 25.0;
    s.electrode_load = asic::ResistiveLoad{10.0};
    s.script.push_back({CmdSetRole{0, asic::ElectrodeRole::Active}, std::nullopt});
    s.script.push_back({CmdSetRole{1, asic::ElectrodeRole::Return}, std::nullopt});
    s.script.push_back({CmdSetWaveform{asic::StimParams{}}, std::nullopt});
    s.script.push_back({CmdTrigger{}, std::nullopt});
    s.script.push_back({CmdQueryStatus{}, std::nullopt});
    s.validate();
    return s;
}

} // namespace retisim::harness
