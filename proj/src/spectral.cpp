#include "retisim/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace retisim::spectral {

SpectralCurve::SpectralCurve(std::vector<double> wavelength_nm, std::vector<double> value)
    : wavelength_nm_(std::move(wavelength_nm)), value_(std::move(value)) {
    if (wavelength_nm_.size() < 2 || wavelength_nm_.size() != value_.size())
        throw ValidationError("spectral curve needs >= 2 matching samples");
    for (std::size_t i = 0; i < wavelength_nm_.size(); ++i) {
        if (!std::isfinite(wavelength_nm_[i]) || !std::isfinite(value_[i]) || value_[i] < 0.0)
            throw ValidationError("spectral curve values must be finite and >= 0");
        if (i > 0 && wavelength_nm_[i] <= wavelength_nm_[i - 1])
            throw ValidationError("spectral curve wavelengths must be strictly increasing");
    }
}

double SpectralCurve::operator()(double lambda_nm) const {
    if (!contains(lambda_nm))
        throw DomainError("wavelength " + std::to_string(lambda_nm) + " nm outside curve domain [" +
                          std::to_string(lambda_min()) + ", " + std::to_string(lambda_max()) + "]");
    auto it = std::upper_bound(wavelength_nm_.begin(), wavelength_nm_.end(), lambda_nm);
    if (it == wavelength_nm_.end())
        return value_.back();
    if (it == wavelength_nm_.begin())
        return value_.front();
    const std::size_t i = static_cast<std::size_t>(it - wavelength_nm_.begin());
    const double x0 = wavelength_nm_[i - 1], x1 = wavelength_nm_[i];
    const double y0 = value_[i - 1], y1 = value_[i];
    return y0 + (y1 - y0) * (lambda_nm - x0) / (x1 - x0);
}

SpectralCurve SpectralCurve::scaled(double factor) const {
    if (factor < 0.0)
        throw ValidationError("scale factor must be >= 0");
    std::vector<double> v = value_;
    for (double& x : v)
        x *= factor;
    return SpectralCurve(wavelength_nm_, std::move(v));
}

SpectralCurve SpectralCurve::from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open spectral CSV: " + path);
    std::vector<double> wl, val;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double a, b;
        if (ls >> a >> b) {
            wl.push_back(a);
            val.push_back(b);
        }
        // non-numeric rows (e.g. a header) are skipped
    }
    return SpectralCurve(std::move(wl), std::move(val));
}

void SpectralCurve::to_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out)
        throw ValidationError("cannot write spectral CSV: " + path);
    out << "wavelength_nm,value\n";
    char buf[64];
    for (std::size_t i = 0; i < wavelength_nm_.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g\n", wavelength_nm_[i], value_[i]);
        out << buf;
    }
}

JunctionStack JunctionStack::design(const SpectralCurve& absorption, double lambda_design_nm,
                                    int n_junctions, double total_absorption) {
    JunctionStack s;
    s.n_junctions = n_junctions;
    s.absorption_per_um = absorption;
    s.lambda_design_nm = lambda_design_nm;
    const double alpha = absorption(lambda_design_nm);
    s.thickness_um = solve_equal_thicknesses(alpha, n_junctions, total_absorption);
    return s;
}

namespace {

constexpr double kMpPhiAnchorMw = 36.5;   // at 850 nm over 9 mm2
constexpr double kMpPhiAnchorNm = 850.0;
constexpr double kMpPhiAreaMm2 = 9.0;
constexpr double kMpPhiDecadePerNm = 0.002;
constexpr double kMpPhiKneeNm = 700.0;
constexpr double kMpPhiMinNm = 600.0;
constexpr double kMpPhiMaxNm = 1050.0;
constexpr double kEqeAnchor = 0.93;       // scaled EQE at the design wavelength

} // namespace

double mp_phi(double lambda_nm, double spot_area_mm2) {
    if (spot_area_mm2 <= 0.0)
        throw ValidationError("spot area must be positive");
    if (lambda_nm < kMpPhiMinNm || lambda_nm > kMpPhiMaxNm)
        throw DomainError("mp_phi wavelength outside [600, 1050] nm");
    const double lam = std::max(lambda_nm, kMpPhiKneeNm);
    const double base = kMpPhiAnchorMw *
                        std::pow(10.0, kMpPhiDecadePerNm * (lam - kMpPhiAnchorNm));
    return base * (spot_area_mm2 / kMpPhiAreaMm2);
}

double eye_transmission(const SpectralModel& model, double lambda_nm) {
    const double t = model.eye(lambda_nm);
    return std::clamp(t, 0.0, 1.0);
}

double eye_transmission(double lambda_nm) {
    return eye_transmission(SpectralModel::defaults(), lambda_nm);
}

std::vector<double> junction_absorptions(const JunctionStack& stack, double lambda_nm) {
    if (static_cast<int>(stack.thickness_um.size()) != stack.n_junctions)
        throw ValidationError("junction stack thickness count mismatch");
    const double alpha = stack.absorption_per_um(lambda_nm);
    std::vector<double> absorbed(stack.thickness_um.size());
    double remaining = 1.0;
    for (std::size_t i = 0; i < stack.thickness_um.size(); ++i) {
        const double t = stack.thickness_um[i];
        if (t <= 0.0)
            throw ValidationError("junction thickness must be positive");
        const double frac = 1.0 - std::exp(-alpha * t);
        absorbed[i] = remaining * frac;
        remaining -= absorbed[i];
    }
    return absorbed;
}

std::vector<double> solve_equal_thicknesses(double alpha_design_per_um, int n_junctions,
                                            double total_absorption) {
    if (alpha_design_per_um <= 0.0)
        throw ValidationError("design absorption coefficient must be positive");
    if (n_junctions < 1)
        throw ValidationError("need at least one junction");
    if (total_absorption < 0.0 || total_absorption >= 1.0)
        throw ValidationError("total absorption must lie in [0, 1)");
    const double a = total_absorption / n_junctions;
    std::vector<double> t(static_cast<std::size_t>(n_junctions));
    double remaining = 1.0;
    for (int i = 0; i < n_junctions; ++i) {
        // segment i must absorb fraction a of the original beam out of the
        // `remaining` light that reaches it
        t[static_cast<std::size_t>(i)] = -std::log1p(-a / remaining) / alpha_design_per_um;
        remaining -= a;
    }
    return t;
}

double pv_eqe_scaled(const JunctionStack& stack, double lambda_nm) {
    const auto absorbed = junction_absorptions(stack, lambda_nm);
    const double worst = *std::min_element(absorbed.begin(), absorbed.end());
    return stack.n_junctions * worst;
}

double pv_eqe_scaled(double lambda_nm) {
    return pv_eqe_scaled(SpectralModel::defaults().stack, lambda_nm);
}

double power_delivery_capacity(const SpectralModel& model, double lambda_nm,
                               double spot_area_mm2) {
    return mp_phi(lambda_nm, spot_area_mm2) * eye_transmission(model, lambda_nm) *
           pv_eqe_scaled(model.stack, lambda_nm);
}

double power_delivery_capacity(double lambda_nm) {
    return power_delivery_capacity(SpectralModel::defaults(), lambda_nm);
}

OptimumResult optimum_wavelength(const SpectralModel& model, double lambda_lo_nm,
                                 double lambda_hi_nm, double step_nm) {
    if (step_nm <= 0.0)
        throw ValidationError("grid step must be positive");
    if (lambda_hi_nm < lambda_lo_nm)
        throw ValidationError("empty wavelength grid");
    OptimumResult best;
    best.lambda_nm = lambda_lo_nm;
    best.capacity_mw = -1.0;
    for (double lam = lambda_lo_nm; lam <= lambda_hi_nm + 1e-9; lam += step_nm) {
        const double cap = power_delivery_capacity(model, lam);
        if (cap > best.capacity_mw) { // strict: ties keep the shorter wavelength
            best.capacity_mw = cap;
            best.lambda_nm = lam;
        }
    }
    if (best.capacity_mw <= 0.0) {
        best.capacity_mw = std::max(best.capacity_mw, 0.0);
        best.zero_capacity = true;
    }
    return best;
}

OptimumResult optimum_wavelength(double lambda_lo_nm, double lambda_hi_nm, double step_nm) {
    return optimum_wavelength(SpectralModel::defaults(), lambda_lo_nm, lambda_hi_nm, step_nm);
}

double fresnel_reflectance(double n1, double n2, double theta_deg) {
    if (n1 < 1.0 || n2 < 1.0)
        throw ValidationError("refractive indices must be >= 1");
    if (theta_deg < 0.0 || theta_deg >= 90.0)
        throw ValidationError("incidence angle must lie in [0, 90) degrees");
    const double theta = theta_deg * M_PI / 180.0;
    const double sin_t = n1 / n2 * std::sin(theta);
    if (sin_t >= 1.0)
        throw DomainError("total internal reflection: no transmitted wave");
    const double cos_i = std::cos(theta);
    const double cos_t = std::sqrt(1.0 - sin_t * sin_t);
    const double rs = (n1 * cos_i - n2 * cos_t) / (n1 * cos_i + n2 * cos_t);
    const double rp = (n2 * cos_i - n1 * cos_t) / (n2 * cos_i + n1 * cos_t);
    return 0.5 * (rs * rs + rp * rp);
}

double lid_transmission(const LidOptics& optics) {
    const double r_outer = fresnel_reflectance(optics.n_outer, optics.n_lid, optics.angle_deg);
    // refraction angle inside the lid sets the incidence on the inner face
    const double theta = optics.angle_deg * M_PI / 180.0;
    const double sin_lid = optics.n_outer / optics.n_lid * std::sin(theta);
    const double theta_lid_deg = std::asin(sin_lid) * 180.0 / M_PI;
    const double r_inner = fresnel_reflectance(optics.n_lid, optics.n_inner, theta_lid_deg);
    return (1.0 - r_outer) * (1.0 - r_inner);
}

const SpectralModel& SpectralModel::defaults() {
    static const SpectralModel model = make_default();
    return model;
}

} // namespace retisim::spectral
