#include "retisim/spectral.hpp"

namespace retisim::spectral {

namespace {

// Ocular transmission to the anterior retina, digitised over 400-1100 nm.
// Near-constant through the near infrared up to 850 nm, then a rapid decline
// into the water absorption band with its minimum at 980 nm.
SpectralCurve builtin_eye_transmission() {
    return SpectralCurve(
        {400, 425, 450, 475, 500, 525, 550, 600, 650, 700, 725, 750,
         775, 800, 825, 850, 875, 900, 925, 950, 965, 980, 1000, 1025,
         1050, 1075, 1100},
        {0.10, 0.28, 0.42, 0.50, 0.56, 0.61, 0.64, 0.70, 0.73, 0.75, 0.76, 0.77,
         0.78, 0.79, 0.795, 0.80, 0.77, 0.72, 0.64, 0.50, 0.40, 0.30, 0.32, 0.40,
         0.45, 0.42, 0.40});
}

// GaAs-like absorption coefficient in 1/um. Gradual growth toward shorter
// wavelengths, a steep fall from the design point to the bandgap cutoff at
// 870 nm and zero beyond it.
SpectralCurve builtin_absorption_per_um() {
    return SpectralCurve(
        {400, 450, 500, 550, 600, 650, 700, 750, 800, 825, 840, 850,
         855, 860, 865, 870, 900, 1000, 1100},
        {12.0, 10.0, 8.0, 6.0, 4.5, 3.0, 2.0, 1.45, 0.95, 0.75, 0.62, 0.55,
         0.35, 0.18, 0.07, 0.0, 0.0, 0.0, 0.0});
}

} // namespace

SpectralModel SpectralModel::make_default() {
    SpectralModel m;
    m.eye = builtin_eye_transmission();
    // thicknesses solved so all five segments absorb equally at 850 nm and
    // the scaled EQE lands on the 93% anchor there
    m.stack = JunctionStack::design(builtin_absorption_per_um(), 850.0, 5, 0.93);
    return m;
}

} // namespace retisim::spectral
