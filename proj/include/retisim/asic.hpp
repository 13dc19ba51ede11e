#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "retisim/telemetry.hpp"
#include "retisim/waveform.hpp"

namespace retisim::asic {

constexpr int kElectrodeCount = 256;
constexpr double kClockHz = 600e3;
constexpr double kTickUs = 1e3 / 600.0;   // one recovered-clock period
constexpr double kRailThresholdV = 3.0;
constexpr double kRailHysteresisV = 0.3;
constexpr double kAnalogRailV = 3.0;
constexpr double kDigitalRailV = 1.0;
constexpr double kMaxRefreshHz = 60.0;

// Command opcodes carried in the forward telemetry frames. This table is the
// canonical wire format; payload layouts are documented in the README.
enum Opcode : std::uint8_t {
    kOpSetElectrodeRole = 0x01, // [index, role]
    kOpSetWaveform = 0x02,      // [code, p1_hi, p1_lo, gap_hi, gap_lo, p2_hi, p2_lo, flags]
    kOpTrigger = 0x03,          // []
    kOpDisableAll = 0x04,       // []
    kOpQueryStatus = 0x05,      // []
    // back telemetry
    kOpAck = 0xD0,
    kOpNack = 0xE0,
    kOpStatus = 0xF1,
    kOpPowerOnReset = 0xF0,
};

enum class NackReason : std::uint8_t {
    UnknownOpcode = 1,
    BadPayload = 2,
    BadElectrodeIndex = 3,
    NoActiveElectrode = 4,
    NoReturnElectrode = 5,
    Unpowered = 6,
};

enum class ElectrodeRole : std::uint8_t { Disabled = 0, Active = 1, Return = 2 };
enum class Polarity : std::uint8_t { CathodicFirst = 0, AnodicFirst = 1 };
enum class PulseShape : std::uint8_t { Biphasic = 0, Monophasic = 1 };

struct StimParams {
    double amplitude_ua = 250.0;
    double phase1_us = 500.0;
    double interphase_us = 20.0;
    double phase2_us = 500.0;
    Polarity polarity = Polarity::CathodicFirst;
    PulseShape shape = PulseShape::Biphasic;
};

// Current DAC with the bias-mismatch gain error observed on the real part.
struct DacModel {
    double full_scale_ua = 500.0;
    int codes = 256;
    double gain_error = 0.08;
    double offset_ua = 0.0;

    double lsb_ua() const { return full_scale_ua / codes; }
    int quantize(double amplitude_ua) const;
    double actual_ua(double amplitude_ua) const; // code value with error applied
};

struct RandlesLoad {
    double r_s_kohm = 2.5;
    double r_ct_kohm = 50.0;
    double c_dl_nf = 91.0;

    // Choose C_dl so |Z| at 1 kHz matches the measured electrode impedance.
    static RandlesLoad calibrated(double r_s_kohm = 2.5, double r_ct_kohm = 50.0,
                                  double target_kohm_at_1khz = 3.1);
    double impedance_kohm(double f_hz) const;
};

struct ResistiveLoad {
    double r_kohm = 10.0;
};

using ElectrodeLoad = std::variant<ResistiveLoad, RandlesLoad>;

struct ElectrodeState {
    ElectrodeRole role = ElectrodeRole::Disabled;
    ElectrodeLoad load = ResistiveLoad{};
};

// Power conditioning result: rectified/smoothed DC estimate and the rail
// assertion timeline derived from it.
struct RailTimeline {
    Waveform dc_v;
    std::vector<std::pair<double, bool>> transitions_ns; // (time, rails_up)
    bool rails_up_at_end = false;

    bool rails_up_at(double t_ns) const;
    std::optional<double> first_up_ns() const;
};

// Full-wave rectification of the differential pair followed by first-order
// smoothing. Rails assert at 3.0 V with 0.3 V release hysteresis.
RailTimeline power_conditioning(const DifferentialPair& v_diff,
                                double smoothing_tau_ns = 5000.0);

// Fixed back-telemetry frame announcing a completed power-up.
telemetry::Frame por_frame();

struct PulseResult {
    int electrode = -1;
    double t_start_us = 0.0; // set by the orchestrator
    Waveform current_ua;     // one sample per clock tick
    Waveform voltage_v;
    bool compliance_limited = false;
    double plateau_v = 0.0;  // largest voltage magnitude reached
    double net_charge_nc = 0.0;
};

// Constant-current waveform with DAC error applied and all timing snapped to
// the recovered clock tick.
Waveform generate_pulse(const StimParams& p, const DacModel& dac);

// Load response to a drive current waveform.
Waveform electrode_voltage(const Waveform& i_ua, const ElectrodeLoad& load);

// Pulse into a concrete load with the compliance clamp applied: the voltage
// saturates at the compliance limit and the delivered current degrades.
PulseResult drive_electrode(int electrode, const StimParams& p, const DacModel& dac,
                            const ElectrodeLoad& load, double compliance_v);

// Time integral of a current waveform in nanocoulombs.
double charge_balance(const Waveform& i_ua);

struct SchedulePlan {
    bool feasible = false;
    double period_us = 0.0;
    double required_us = 0.0; // longest configured pulse
};

// All requested pulses must fit inside one refresh period; electrodes fire
// simultaneously, so the bound is the longest pulse, not the sum.
SchedulePlan frame_schedule(const std::vector<StimParams>& pulses, double refresh_hz);

struct CommandResult {
    bool accepted = false;
    std::optional<NackReason> nack;
    std::optional<telemetry::Frame> reply;
    std::vector<PulseResult> pulses; // emitted by TRIGGER
};

// Sequential behavioural model of the stimulator: power state, electrode
// configuration, waveform registers and back telemetry. One mutator at a
// time; independent instances are unrelated.
class StimulatorAsic {
  public:
    StimulatorAsic();

    // Drive the power state. Returns the POR frame exactly once per power
    // cycle, after the DC rail crosses the threshold with a recovered clock.
    std::optional<telemetry::Frame> update_power(double dc_v, bool clock_locked);

    bool rails_up() const { return rails_up_; }
    double analog_rail_v() const { return rails_up_ ? kAnalogRailV : 0.0; }
    double digital_rail_v() const { return rails_up_ ? kDigitalRailV : 0.0; }
    bool por_emitted() const { return por_emitted_; }

    CommandResult apply_command(const telemetry::Frame& f);

    void set_electrode_load(int index, const ElectrodeLoad& load);
    const StimParams& waveform() const { return waveform_; }
    ElectrodeRole role(int index) const { return electrodes_.at(index).role; }
    int count_role(ElectrodeRole r) const;

    DacModel& dac() { return dac_; }
    const DacModel& dac() const { return dac_; }
    void set_compliance_v(double v) { compliance_v_ = v; }
    double compliance_v() const { return compliance_v_; }

    // Deterministic digest of the externally visible state.
    std::uint64_t state_hash() const;

  private:
    CommandResult nack(NackReason r) const;
    CommandResult ack() const;

    bool rails_up_ = false;
    bool clock_locked_ = false;
    bool por_emitted_ = false;
    std::array<ElectrodeState, kElectrodeCount> electrodes_;
    StimParams waveform_;
    DacModel dac_;
    double compliance_v_ = 3.3; // rectified input rail minus driver headroom
    bool temperature_nominal_ = true; // no sensor model; always nominal
};

} // namespace retisim::asic
