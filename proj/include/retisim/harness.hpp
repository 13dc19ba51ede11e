#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "retisim/analog_front.hpp"
#include "retisim/asic.hpp"
#include "retisim/budget.hpp"
#include "retisim/scenario.hpp"
#include "retisim/telemetry.hpp"

namespace retisim::harness {

struct Event {
    double t_us = 0.0;
    std::string kind;   // rails_up, clock_lock, por, ack, nack, status, pulse
    std::string detail;
};

// Everything observable from one end-to-end run, on a common time base.
struct TraceBundle {
    std::string scenario_name;
    double dt_ns = 10.0;
    Waveform optical_pupil_mw;
    Waveform optical_cell_mw;
    ElectricalWaveform pv;
    Waveform sense_v;
    DifferentialPair pair;
    Waveform dc_rail_v;
    std::vector<double> clock_edges_ns;
    std::vector<Event> events;
    std::vector<asic::PulseResult> pulses;
    budget::BudgetReport budget;
    telemetry::BerResult ber;
    double recovered_bitrate_kbps = 0.0;
    double por_latency_us = -1.0; // -1 when no POR occurred
    std::uint64_t bundle_hash = 0;
};

TraceBundle run_end_to_end(const Scenario& s);

struct SweepRow {
    double value = 0.0;
    double capacity_mw = 0.0;
    double ber = 0.0;
    double por_latency_us = -1.0;
    double p_mpp_mw = 0.0;
    double p_electrical_mw = 0.0;
    double safety_margin_mw = 0.0;
    double p_dissipated_mw = 0.0;
    bool verdict_pass = false;
};

struct SweepTable {
    std::string param;
    std::vector<SweepRow> rows;
};

// Registered sweepables: lambda_nm, p_pupil_mw, bitrate_kbps, mod_depth_mw,
// load_r_kohm. Each row is an independent run of the scenario with the
// parameter substituted.
SweepTable sweep(const Scenario& base, const std::string& param,
                 const std::vector<double>& values);

// Writes one CSV per waveform, events.json, budget.json and a manifest with
// per-file digests. Waveforms and tables are CSV, reports and events JSON.
// Emission is deterministic: equal bundles produce byte-identical files.
std::vector<std::string> emit(const TraceBundle& bundle, const std::string& output_dir);
std::string emit(const SweepTable& table, const std::string& output_dir);
std::string to_csv(const SweepTable& table);
std::string to_json(const SweepTable& table);

// Modulate -> photodiode -> interface -> decode at nominal parameters, in
// chunks, without retaining waveforms. Supply rail held at the nominal
// operating voltage. Returns the BER over the payload region.
struct LinkBerConfig {
    double bitrate_kbps = 600.0;
    double p_high_mw = 28.0;  // on-cell levels
    double p_low_mw = 20.0;
    double edge_time_ns = 50.0;
    double dt_ns = 10.0;
    double supply_v = 3.4;
    double noise_mw_rms = 0.0;
    std::uint64_t seed = 0;
    int head_pad_bits = 256; // settle/locking preamble before the payload
};

telemetry::BerResult link_ber_run(const std::vector<std::uint8_t>& payload_bits,
                                  const LinkBerConfig& cfg);

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ull);

} // namespace retisim::harness
