#pragma once

#include <string>
#include <utility>

#include "retisim/waveform.hpp"

namespace retisim::analog {

// Lumped model of the five-junction series cell: one effective diode with the
// junction count folded into the exponential slope, a photocurrent
// proportional to the optical power on the cell, and first-order transient
// response with separate charge/discharge time constants.
//
// The default parameters come from PVModel::calibrated(), which solves the
// photocurrent scale, saturation current and ideality so that the cell hits
// its measured maximum power point and loaded operating point exactly; the
// open-circuit voltage then comes out at ~5.65 V against the ~5 V nameplate.
struct PVModel {
    int n_junctions = 5;
    double i_ph_per_mw = 0.0;        // mA per mW of optical power on the cell
    double i0_ma = 0.0;              // effective saturation current
    double ideality = 1.0;
    double thermal_voltage_v = 0.02585; // 300 K
    double v_oc_nominal_v = 5.0;
    double tau_rise_ns = 0.0;        // terminal-voltage charge time constant
    double tau_fall_ns = 0.0;        // discharge time constant

    // n * ideality * Vt: the voltage scale of the series stack.
    double stack_vt() const { return n_junctions * ideality * thermal_voltage_v; }

    double current_ma(double v, double p_mw) const;
    double v_oc(double p_mw) const;

    static PVModel calibrated();

    // Key-value persistence of the calibrated parameters.
    void save(const std::string& path) const;
    static PVModel load(const std::string& path);
};

// DC load seen by the cell: a resistance or a constant-power sink.
struct Load {
    enum class Kind { Resistive, ConstantPower };
    Kind kind = Kind::Resistive;
    double value = 1.0; // kOhm or mW

    static Load resistive(double kohm) { return {Kind::Resistive, kohm}; }
    static Load constant_power(double mw) { return {Kind::ConstantPower, mw}; }
};

// Equivalent resistance of the stimulator plus interface at the measured
// operating point (3.4 V / 2.98 mA).
double nominal_dc_load_kohm();

// Illuminated I-V curve sampled on [0, V_oc], currents clamped at zero.
ElectricalWaveform iv_curve(const PVModel& model, double p_mw, int n_points = 256);

struct MaxPowerPoint {
    double v = 0.0;
    double i_ma = 0.0;
    double p_mw = 0.0;
    double efficiency = 0.0; // p_mw / optical power supplied
};

MaxPowerPoint max_power_point(const PVModel& model, double p_mw);

struct OperatingPoint {
    double v = 0.0;
    double i_ma = 0.0;
    double p_mw = 0.0;
    bool brown_out = false; // constant-power demand exceeded the MPP
};

OperatingPoint operating_point(const PVModel& model, double p_mw, const Load& load);

// Optical power that puts the loaded cell at the requested static voltage.
double power_for_voltage(const PVModel& model, double load_r_kohm, double v);

// Terminal voltage under a resistive load for a sampled optical input.
// First-order relaxation toward the instantaneous static operating point,
// tau_rise when the voltage is increasing and tau_fall when decreasing.
// A zero time constant selects the ideal zero-lag response; otherwise the
// sample period must resolve the faster of the two constants (dt <= tau/10).
ElectricalWaveform pv_transient(const PVModel& model, const Waveform& p_in_mw,
                                double load_r_kohm);

// Photocurrent of the reverse-biased receiver: responsivity * power through a
// single-pole bandwidth limit.
Waveform photodiode_current(double responsivity_ma_per_mw, const Waveform& p_in_mw,
                            double bandwidth_mhz = 3.7);

// Sense resistor, AC coupling, Schmitt comparison and complementary
// rail-to-rail outputs with shaped edges.
struct InterfaceCircuit {
    double r_sense_kohm = 8.2;
    double c_couple_pf = 150.0;
    double r_feedback_kohm = 820.0;
    double schmitt_high_v = 0.15;  // on the AC-coupled sense signal
    double schmitt_low_v = -0.15;
    double out_rise_ns = 112.0;    // 10-90% output edge times
    double out_fall_ns = 160.0;
    double responsivity_ma_per_mw = 0.55;
    double pd_power_fraction = 0.02; // share of the beam falling on the photodiode
    double min_supply_v = 2.0;       // below this the outputs are held low
    double quiescent_ma = 0.96;

    double hp_corner_hz() const; // 1/(2 pi R_fb C_c)
};

struct InterfaceTrace {
    Waveform sense_v;   // voltage across the sense resistor
    DifferentialPair pair;
};

InterfaceTrace interface_digitize(const InterfaceCircuit& circ, const Waveform& i_pd_ma,
                                  const Waveform& supply_v);
InterfaceTrace interface_digitize(const InterfaceCircuit& circ, const Waveform& i_pd_ma,
                                  double supply_v);

// Open-circuit consumption: constant-current draw times the supply.
double interface_quiescent_power(const InterfaceCircuit& circ, double supply_v);

} // namespace retisim::analog
