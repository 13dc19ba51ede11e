#pragma once

#include <string>

#include "retisim/analog_front.hpp"
#include "retisim/spectral.hpp"

namespace retisim::budget {

struct ImplantGeometry {
    double length_mm = 4.6;
    double width_mm = 3.7;
    double thickness_mm = 0.9;

    double footprint_mm2() const { return length_mm * width_mm; }
    double surface_mm2() const {
        return 2.0 * (length_mm * width_mm + length_mm * thickness_mm +
                      width_mm * thickness_mm);
    }
};

constexpr double kFluxLimitMwPerMm2 = 1.46; // 2 degC temperature-rise criterion

struct ThermalLimits {
    double limit_2d_mw = 0.0; // retina-facing footprint only
    double limit_3d_mw = 0.0; // full exposed surface
};

ThermalLimits thermal_limits(const ImplantGeometry& g, double flux_limit_mw_mm2);

// Staged power flow from the pupil to electrical delivery, with the safety
// and thermal verdicts evaluated against the same spectral model.
struct BudgetReport {
    double lambda_nm = 0.0;
    double p_pupil_mw = 0.0;
    double p_retina_mw = 0.0;
    double p_at_pv_mw = 0.0;
    double p_optical_loss_mw = 0.0;
    double p_dissipated_mw = 0.0;
    double p_electrical_mw = 0.0;
    double mp_phi_mw = 0.0;
    double safety_margin_mw = 0.0; // mp_phi - p_pupil, clamped at zero
    bool safe = false;             // p_pupil within the permissible limit
    double limit_2d_mw = 0.0;
    double limit_3d_mw = 0.0;
    bool pass_2d = false;
    bool pass_3d = false;
};

struct BudgetConfig {
    ImplantGeometry geometry;
    double flux_limit_mw_mm2 = kFluxLimitMwPerMm2;
    double spot_area_mm2 = 9.0;
    analog::PVModel pv = analog::PVModel::calibrated();
    analog::Load dc_load = analog::Load::resistive(analog::nominal_dc_load_kohm());
};

BudgetReport power_chain(double p_pupil_mw, double lambda_nm);
BudgetReport power_chain(const spectral::SpectralModel& model, const BudgetConfig& cfg,
                         double p_pupil_mw, double lambda_nm);

// Power density over a circular pupil, in mW/cm2.
double irradiance_mw_cm2(double p_mw, double pupil_diameter_mm);

struct Verdict {
    bool pass = false;        // safe illumination and conservative thermal limit met
    bool pass_conservative = false;
    bool pass_3d = false;
    bool safe_illumination = false;
};

Verdict verdict(const BudgetReport& report);

std::string to_json(const BudgetReport& report, double pupil_diameter_mm = 5.0);

} // namespace retisim::budget
