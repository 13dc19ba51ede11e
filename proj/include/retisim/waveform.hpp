#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "retisim/errors.hpp"

namespace retisim {

// Uniformly sampled single-channel time series. The physical meaning of the
// samples (optical mW, volts, mA, uA) is set by context; the sample period is
// carried in nanoseconds throughout the library.
struct Waveform {
    double dt_ns = 10.0;
    std::vector<double> samples;

    Waveform() = default;
    Waveform(double dt, std::vector<double> s) : dt_ns(dt), samples(std::move(s)) {
        if (dt_ns <= 0.0)
            throw ValidationError("waveform sample period must be positive");
    }

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    double duration_ns() const { return dt_ns * static_cast<double>(samples.size()); }
    double time_ns(std::size_t i) const { return dt_ns * static_cast<double>(i); }

    double mean() const;
    double min_value() const;
    double max_value() const;
};

// Sampled voltage/current pair sharing one time base (PV terminal behaviour,
// electrode drive).
struct ElectricalWaveform {
    double dt_ns = 10.0;
    std::vector<double> voltage_v;
    std::vector<double> current_ma;

    std::size_t size() const { return voltage_v.size(); }

    Waveform voltage() const { return Waveform(dt_ns, voltage_v); }
    Waveform current() const { return Waveform(dt_ns, current_ma); }
};

// Complementary logic pair, as presented to the stimulator's input.
struct DifferentialPair {
    Waveform p;
    Waveform n;
};

// Times between lo_frac and hi_frac crossings of the normalised swing,
// averaged over all full transitions found in the waveform.
struct RiseFall {
    double rise_ns = 0.0;
    double fall_ns = 0.0;
    int rise_count = 0;
    int fall_count = 0;
};

RiseFall measure_rise_fall(const Waveform& w, double lo_frac, double hi_frac);

} // namespace retisim
