#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "retisim/asic.hpp"

namespace retisim::harness {

// One scripted command for the external driver. Commands without an explicit
// time are sent back to back after the previous frame.
struct CmdSetRole {
    int electrode = 0;
    asic::ElectrodeRole role = asic::ElectrodeRole::Active;
};
struct CmdSetWaveform {
    asic::StimParams params;
};
struct CmdTrigger {};
struct CmdDisableAll {};
struct CmdQueryStatus {};

using Command =
    std::variant<CmdSetRole, CmdSetWaveform, CmdTrigger, CmdDisableAll, CmdQueryStatus>;

struct ScriptEntry {
    Command cmd;
    std::optional<double> at_us; // earliest transmit time for the frame
};

// Complete description of one deterministic run. Keys in the text form carry
// explicit units (p_pupil_high_mw, time_step_ns, ...).
struct Scenario {
    std::string name = "scenario";
    double lambda_nm = 852.0;
    double p_pupil_high_mw = 35.0;
    double p_pupil_low_mw = 25.0;
    double bitrate_kbps = 600.0;
    double edge_time_ns = 50.0;
    double time_step_ns = 10.0;
    std::uint64_t seed = 0;
    double noise_mw_rms = 0.0;      // additive optical noise at the pupil
    int idle_head_bits = 128;       // alternating filler before the first frame
    int idle_tail_bits = 32;
    double tail_margin_us = 200.0;  // extra simulated time after the last frame
    asic::ElectrodeLoad electrode_load = asic::ResistiveLoad{10.0};
    std::vector<ScriptEntry> script;

    double p_pupil_mean_mw() const { return 0.5 * (p_pupil_high_mw + p_pupil_low_mw); }

    // Throws ValidationError on any inconsistency; no outputs are produced
    // for an invalid scenario.
    void validate() const;

    static Scenario from_file(const std::string& path);
    static Scenario from_string(const std::string& text, const std::string& origin = "<string>");
    static Scenario paper_nominal();
};

} // namespace retisim::harness
