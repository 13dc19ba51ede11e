#include "retisim/waveform.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace retisim {

double Waveform::mean() const {
    if (samples.empty())
        return 0.0;
    return std::accumulate(samples.begin(), samples.end(), 0.0) /
           static_cast<double>(samples.size());
}

double Waveform::min_value() const {
    if (samples.empty())
        throw ValidationError("min of empty waveform");
    return *std::min_element(samples.begin(), samples.end());
}

double Waveform::max_value() const {
    if (samples.empty())
        throw ValidationError("max of empty waveform");
    return *std::max_element(samples.begin(), samples.end());
}

namespace {

// Interpolated time at which the waveform crosses `level` between samples
// i-1 and i.
double crossing_time(const Waveform& w, std::size_t i, double level) {
    const double a = w.samples[i - 1];
    const double b = w.samples[i];
    const double frac = (level - a) / (b - a);
    return w.dt_ns * (static_cast<double>(i - 1) + frac);
}

} // namespace

RiseFall measure_rise_fall(const Waveform& w, double lo_frac, double hi_frac) {
    if (w.samples.size() < 2)
        throw ValidationError("waveform too short for edge measurement");
    if (!(0.0 < lo_frac && lo_frac < hi_frac && hi_frac < 1.0))
        throw ValidationError("edge fractions must satisfy 0 < lo < hi < 1");

    const double vmin = w.min_value();
    const double vmax = w.max_value();
    if (vmax - vmin <= 0.0)
        throw ValidationError("waveform has no swing; no transitions to measure");
    const double lo = vmin + lo_frac * (vmax - vmin);
    const double hi = vmin + hi_frac * (vmax - vmin);

    RiseFall out;
    double rise_sum = 0.0;
    double fall_sum = 0.0;
    // Walk all level crossings; a rise is a lo-upward crossing followed by a
    // hi-upward crossing with no hi-downward in between, and symmetrically
    // for falls.
    double t_lo_up = -1.0;
    double t_hi_down = -1.0;
    for (std::size_t i = 1; i < w.samples.size(); ++i) {
        const double a = w.samples[i - 1];
        const double b = w.samples[i];
        if (a < lo && b >= lo)
            t_lo_up = crossing_time(w, i, lo);
        if (a < hi && b >= hi && t_lo_up >= 0.0) {
            rise_sum += crossing_time(w, i, hi) - t_lo_up;
            ++out.rise_count;
            t_lo_up = -1.0;
        }
        if (a > hi && b <= hi)
            t_hi_down = crossing_time(w, i, hi);
        if (a > lo && b <= lo && t_hi_down >= 0.0) {
            fall_sum += crossing_time(w, i, lo) - t_hi_down;
            ++out.fall_count;
            t_hi_down = -1.0;
        }
    }
    if (out.rise_count == 0 && out.fall_count == 0)
        throw ValidationError("no full transitions found in waveform");
    out.rise_ns = out.rise_count ? rise_sum / out.rise_count : 0.0;
    out.fall_ns = out.fall_count ? fall_sum / out.fall_count : 0.0;
    return out;
}

} // namespace retisim
