#pragma once

#include <string>
#include <vector>

#include "retisim/errors.hpp"

namespace retisim::spectral {

// Tabulated wavelength -> value function with linear interpolation between
// samples. Evaluation outside [lambda_min, lambda_max] is an error, never an
// extrapolation.
class SpectralCurve {
  public:
    SpectralCurve() = default;
    SpectralCurve(std::vector<double> wavelength_nm, std::vector<double> value);

    double operator()(double lambda_nm) const;
    double lambda_min() const { return wavelength_nm_.front(); }
    double lambda_max() const { return wavelength_nm_.back(); }
    bool contains(double lambda_nm) const {
        return lambda_nm >= lambda_min() && lambda_nm <= lambda_max();
    }
    std::size_t size() const { return wavelength_nm_.size(); }
    const std::vector<double>& wavelengths() const { return wavelength_nm_; }
    const std::vector<double>& values() const { return value_; }

    SpectralCurve scaled(double factor) const;

    // CSV columns: wavelength_nm,value (header row optional on load).
    static SpectralCurve from_csv(const std::string& path);
    void to_csv(const std::string& path) const;

  private:
    std::vector<double> wavelength_nm_;
    std::vector<double> value_;
};

// Vertically stacked photoabsorber segments sharing one absorption spectrum.
// Thicknesses are chosen so every segment absorbs the same fraction at the
// design wavelength; the series connection then current-limits on whichever
// segment absorbs least at any other wavelength.
struct JunctionStack {
    int n_junctions = 5;
    std::vector<double> thickness_um;
    SpectralCurve absorption_per_um; // 1/um, zero beyond the bandgap cutoff
    double lambda_design_nm = 850.0;

    static JunctionStack design(const SpectralCurve& absorption, double lambda_design_nm,
                                int n_junctions, double total_absorption);
};

// Two-interface lid between an outer medium and the cavity behind it.
struct LidOptics {
    double n_outer = 1.0;
    double n_lid = 2.4;
    double n_inner = 1.0;
    double angle_deg = 0.0;
};

// Safety, transmission and conversion curves plus the junction stack, bundled
// so alternative tables (e.g. loaded from CSV) can replace the built-ins.
struct SpectralModel {
    SpectralCurve eye;  // fraction reaching the anterior retina
    JunctionStack stack;

    static const SpectralModel& defaults();
    static SpectralModel make_default();
};

// Maximum permissible radiant power entering the eye over spot_area_mm2.
// Wavelength-corrected model: constant below 700 nm, one decade per 500 nm
// above it, anchored at 36.5 mW for 9 mm2 at 850 nm. Domain [600, 1050] nm.
double mp_phi(double lambda_nm, double spot_area_mm2 = 9.0);

double eye_transmission(double lambda_nm);
double eye_transmission(const SpectralModel& model, double lambda_nm);

// Per-segment absorbed fractions of unit incident light (Beer-Lambert
// cascade through the stack).
std::vector<double> junction_absorptions(const JunctionStack& stack, double lambda_nm);

// Thicknesses t_1..t_n with equal per-segment absorption total/n at the
// design absorption coefficient. Closed-form, segment by segment.
std::vector<double> solve_equal_thicknesses(double alpha_design_per_um, int n_junctions,
                                            double total_absorption);

// n_junctions * min_i A_i: the externally visible conversion efficiency of a
// series-limited stack, scaled by the junction count.
double pv_eqe_scaled(const JunctionStack& stack, double lambda_nm);
double pv_eqe_scaled(double lambda_nm);

// mp_phi * eye transmission * scaled EQE.
double power_delivery_capacity(const SpectralModel& model, double lambda_nm,
                               double spot_area_mm2 = 9.0);
double power_delivery_capacity(double lambda_nm);

struct OptimumResult {
    double lambda_nm = 0.0;
    double capacity_mw = 0.0;
    bool zero_capacity = false; // no grid point had nonzero capacity
};

// Grid argmax of power_delivery_capacity; ties break toward the shorter
// wavelength.
OptimumResult optimum_wavelength(const SpectralModel& model, double lambda_lo_nm,
                                 double lambda_hi_nm, double step_nm);
OptimumResult optimum_wavelength(double lambda_lo_nm, double lambda_hi_nm, double step_nm);

// Unpolarised Fresnel power reflectance (mean of s and p) at a single
// dielectric interface. theta is measured from the normal in the first
// medium; the total-internal-reflection region is an error.
double fresnel_reflectance(double n1, double n2, double theta_deg);

// Single-pass product of the two interface transmittances. Absorption in the
// lid is neglected, so the result is independent of lid thickness.
double lid_transmission(const LidOptics& optics);

} // namespace retisim::spectral
