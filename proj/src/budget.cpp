#include "retisim/budget.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace retisim::budget {

ThermalLimits thermal_limits(const ImplantGeometry& g, double flux_limit_mw_mm2) {
    if (flux_limit_mw_mm2 <= 0.0)
        throw ValidationError("flux limit must be positive");
    if (g.length_mm <= 0.0 || g.width_mm <= 0.0 || g.thickness_mm <= 0.0)
        throw ValidationError("implant dimensions must be positive");
    return {flux_limit_mw_mm2 * g.footprint_mm2(), flux_limit_mw_mm2 * g.surface_mm2()};
}

BudgetReport power_chain(const spectral::SpectralModel& model, const BudgetConfig& cfg,
                         double p_pupil_mw, double lambda_nm) {
    if (p_pupil_mw < 0.0)
        throw ValidationError("pupil power must be >= 0");
    BudgetReport r;
    r.lambda_nm = lambda_nm;
    r.p_pupil_mw = p_pupil_mw;
    r.mp_phi_mw = spectral::mp_phi(lambda_nm, cfg.spot_area_mm2);
    r.safe = p_pupil_mw <= r.mp_phi_mw;
    r.safety_margin_mw = std::max(0.0, r.mp_phi_mw - p_pupil_mw);

    r.p_retina_mw = p_pupil_mw * spectral::eye_transmission(model, lambda_nm);
    r.p_at_pv_mw = r.p_retina_mw; // spot assumed fully on the cell
    const double eqe = spectral::pv_eqe_scaled(model.stack, lambda_nm);
    r.p_optical_loss_mw = (1.0 - eqe) * r.p_at_pv_mw;
    r.p_dissipated_mw = r.p_at_pv_mw - r.p_optical_loss_mw;
    if (r.p_at_pv_mw > 0.0) {
        const auto op = analog::operating_point(cfg.pv, r.p_at_pv_mw, cfg.dc_load);
        r.p_electrical_mw = std::min(op.p_mw, r.p_dissipated_mw);
    }
    const ThermalLimits limits = thermal_limits(cfg.geometry, cfg.flux_limit_mw_mm2);
    r.limit_2d_mw = limits.limit_2d_mw;
    r.limit_3d_mw = limits.limit_3d_mw;
    r.pass_2d = r.p_dissipated_mw <= r.limit_2d_mw;
    r.pass_3d = r.p_dissipated_mw <= r.limit_3d_mw;
    return r;
}

BudgetReport power_chain(double p_pupil_mw, double lambda_nm) {
    static const BudgetConfig cfg;
    return power_chain(spectral::SpectralModel::defaults(), cfg, p_pupil_mw, lambda_nm);
}

double irradiance_mw_cm2(double p_mw, double pupil_diameter_mm) {
    if (pupil_diameter_mm <= 0.0)
        throw ValidationError("pupil diameter must be positive");
    const double radius_cm = 0.05 * pupil_diameter_mm;
    return p_mw / (M_PI * radius_cm * radius_cm);
}

Verdict verdict(const BudgetReport& report) {
    Verdict v;
    v.safe_illumination = report.safe;
    v.pass_conservative = report.pass_2d;
    v.pass_3d = report.pass_3d;
    v.pass = v.safe_illumination && v.pass_conservative;
    return v;
}

std::string to_json(const BudgetReport& r, double pupil_diameter_mm) {
    const Verdict v = verdict(r);
    char buf[256];
    std::ostringstream out;
    auto num = [&](const char* key, double value, bool comma = true) {
        std::snprintf(buf, sizeof buf, "  \"%s\": %.9g%s\n", key, value, comma ? "," : "");
        out << buf;
    };
    auto boolean = [&](const char* key, bool value, bool comma = true) {
        out << "  \"" << key << "\": " << (value ? "true" : "false")
            << (comma ? ",\n" : "\n");
    };
    out << "{\n";
    out << "  \"schema_version\": 1,\n";
    num("lambda_nm", r.lambda_nm);
    num("p_pupil_mw", r.p_pupil_mw);
    num("p_retina_mw", r.p_retina_mw);
    num("p_at_pv_mw", r.p_at_pv_mw);
    num("p_optical_loss_mw", r.p_optical_loss_mw);
    num("p_dissipated_mw", r.p_dissipated_mw);
    num("p_electrical_mw", r.p_electrical_mw);
    num("mp_phi_mw", r.mp_phi_mw);
    num("safety_margin_mw", r.safety_margin_mw);
    num("irradiance_mw_cm2", irradiance_mw_cm2(r.p_pupil_mw, pupil_diameter_mm));
    num("pupil_diameter_mm", pupil_diameter_mm);
    num("thermal_limit_2d_mw", r.limit_2d_mw);
    num("thermal_limit_3d_mw", r.limit_3d_mw);
    boolean("safe_illumination", v.safe_illumination);
    boolean("pass_thermal_2d", v.pass_conservative);
    boolean("pass_thermal_3d", v.pass_3d);
    boolean("pass", v.pass, false);
    out << "}\n";
    return out.str();
}

} // namespace retisim::budget
