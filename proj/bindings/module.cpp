// Python bindings for the main operations: spectral safety/capacity models,
// the PV cell, the telemetry codec, stimulation pulses and the power budget.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "retisim/analog_front.hpp"
#include "retisim/asic.hpp"
#include "retisim/budget.hpp"
#include "retisim/harness.hpp"
#include "retisim/spectral.hpp"
#include "retisim/telemetry.hpp"

namespace py = pybind11;
using namespace retisim;

namespace {

std::vector<std::uint8_t> to_bits(const std::vector<int>& bits) {
    std::vector<std::uint8_t> out(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i)
        out[i] = bits[i] ? 1 : 0;
    return out;
}

std::vector<int> from_bits(const std::vector<std::uint8_t>& bits) {
    return std::vector<int>(bits.begin(), bits.end());
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "laser-powered retinal stimulator link simulator";

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

    // spectral
    m.def("mp_phi", &spectral::mp_phi, py::arg("lambda_nm"), py::arg("spot_area_mm2") = 9.0,
          "maximum permissible power entering the eye, mW");
    m.def("eye_transmission", py::overload_cast<double>(&spectral::eye_transmission),
          py::arg("lambda_nm"));
    m.def("pv_eqe_scaled", py::overload_cast<double>(&spectral::pv_eqe_scaled),
          py::arg("lambda_nm"));
    m.def("power_delivery_capacity",
          py::overload_cast<double>(&spectral::power_delivery_capacity),
          py::arg("lambda_nm"));
    m.def(
        "optimum_wavelength",
        [](double lo, double hi, double step) {
            const auto r = spectral::optimum_wavelength(lo, hi, step);
            return py::make_tuple(r.lambda_nm, r.capacity_mw, r.zero_capacity);
        },
        py::arg("lambda_lo_nm") = 600.0, py::arg("lambda_hi_nm") = 1000.0,
        py::arg("step_nm") = 1.0,
        "grid argmax of the delivery capacity: (lambda_nm, capacity_mw, zero_capacity)");
    m.def("fresnel_reflectance", &spectral::fresnel_reflectance, py::arg("n1"), py::arg("n2"),
          py::arg("theta_deg") = 0.0);
    m.def(
        "lid_transmission",
        [](double n_outer, double n_lid, double n_inner, double angle_deg) {
            return spectral::lid_transmission({n_outer, n_lid, n_inner, angle_deg});
        },
        py::arg("n_outer") = 1.0, py::arg("n_lid") = 2.4, py::arg("n_inner") = 1.0,
        py::arg("angle_deg") = 0.0);
    m.def(
        "solve_equal_thicknesses",
        [](double alpha, int n, double total) {
            return spectral::solve_equal_thicknesses(alpha, n, total);
        },
        py::arg("alpha_per_um"), py::arg("n_junctions"), py::arg("total_absorption"));

    // analog front end
    m.def(
        "max_power_point",
        [](double p_mw) {
            const auto mpp = analog::max_power_point(analog::PVModel::calibrated(), p_mw);
            return py::make_tuple(mpp.v, mpp.i_ma, mpp.p_mw, mpp.efficiency);
        },
        py::arg("p_mw"), "calibrated cell MPP: (v, i_ma, p_mw, efficiency)");
    m.def(
        "operating_point",
        [](double p_mw, double load_kohm) {
            const auto op = analog::operating_point(analog::PVModel::calibrated(), p_mw,
                                                    analog::Load::resistive(load_kohm));
            return py::make_tuple(op.v, op.i_ma, op.p_mw);
        },
        py::arg("p_mw"), py::arg("load_kohm"),
        "calibrated cell on a resistive load: (v, i_ma, p_mw)");
    m.def(
        "iv_curve",
        [](double p_mw, int n_points) {
            const auto c = analog::iv_curve(analog::PVModel::calibrated(), p_mw, n_points);
            return py::make_tuple(c.voltage_v, c.current_ma);
        },
        py::arg("p_mw"), py::arg("n_points") = 256);
    m.def("interface_quiescent_power",
          [](double supply_v) {
              return analog::interface_quiescent_power(analog::InterfaceCircuit{}, supply_v);
          },
          py::arg("supply_v"));
    m.def("nominal_dc_load_kohm", &analog::nominal_dc_load_kohm);

    // telemetry
    m.def(
        "manchester_roundtrip",
        [](const std::vector<int>& bits) {
            telemetry::BitStream in{to_bits(bits), 600.0};
            const auto symbols = telemetry::manchester_encode(in);
            Waveform levels;
            levels.dt_ns = symbols.half_period_ns() / 8.0;
            levels.samples.reserve(symbols.levels.size() * 8);
            for (auto lvl : symbols.levels)
                for (int k = 0; k < 8; ++k)
                    levels.samples.push_back(lvl);
            const auto out = telemetry::manchester_decode(levels, 600.0);
            return from_bits(out.bits);
        },
        py::arg("bits"), "encode then decode a bit list at 600 kbit/s");
    m.def(
        "frame_encode",
        [](int opcode, const std::vector<int>& payload) {
            telemetry::Frame f;
            f.opcode = static_cast<std::uint8_t>(opcode);
            for (int b : payload)
                f.payload.push_back(static_cast<std::uint8_t>(b));
            return telemetry::bits_to_hex(telemetry::frame_encode(f));
        },
        py::arg("opcode"), py::arg("payload") = std::vector<int>{});
    m.def(
        "frame_decode",
        [](const std::string& hex) {
            const auto res = telemetry::frame_decode(telemetry::bits_from_hex(hex));
            if (!res.ok())
                return py::make_tuple(py::none(), py::none(),
                                      std::string(telemetry::frame_error_name(res.error)));
            return py::make_tuple(py::int_(res.frame->opcode),
                                  py::cast(from_bits(res.frame->payload)),
                                  std::string("none"));
        },
        py::arg("hex"), "returns (opcode, payload, error_name)");
    m.def(
        "link_ber",
        [](const std::vector<int>& payload, double noise_mw_rms, std::uint64_t seed) {
            harness::LinkBerConfig cfg;
            cfg.noise_mw_rms = noise_mw_rms;
            cfg.seed = seed;
            const auto r = harness::link_ber_run(to_bits(payload), cfg);
            return py::make_tuple(r.errors, r.compared, r.ber);
        },
        py::arg("payload_bits"), py::arg("noise_mw_rms") = 0.0, py::arg("seed") = 0,
        "end-to-end link BER: (errors, compared, ber)");

    // stimulation
    m.def(
        "biphasic_pulse",
        [](double amplitude_ua, double phase_us, double interphase_us, double load_kohm,
           double gain_error) {
            asic::StimParams p;
            p.amplitude_ua = amplitude_ua;
            p.phase1_us = phase_us;
            p.phase2_us = phase_us;
            p.interphase_us = interphase_us;
            asic::DacModel dac;
            dac.gain_error = gain_error;
            const auto res = asic::drive_electrode(0, p, dac,
                                                   asic::ResistiveLoad{load_kohm}, 3.3);
            return py::make_tuple(res.plateau_v, res.net_charge_nc, res.compliance_limited);
        },
        py::arg("amplitude_ua") = 250.0, py::arg("phase_us") = 500.0,
        py::arg("interphase_us") = 20.0, py::arg("load_kohm") = 10.0,
        py::arg("gain_error") = 0.08,
        "plateau voltage, net charge and compliance flag of a biphasic pulse");
    m.def(
        "electrode_impedance_kohm",
        [](double f_hz) { return asic::RandlesLoad::calibrated().impedance_kohm(f_hz); },
        py::arg("f_hz") = 1000.0);

    // budget
    m.def(
        "power_chain",
        [](double p_pupil_mw, double lambda_nm) {
            const auto r = budget::power_chain(p_pupil_mw, lambda_nm);
            py::dict d;
            d["lambda_nm"] = r.lambda_nm;
            d["p_pupil_mw"] = r.p_pupil_mw;
            d["p_retina_mw"] = r.p_retina_mw;
            d["p_at_pv_mw"] = r.p_at_pv_mw;
            d["p_optical_loss_mw"] = r.p_optical_loss_mw;
            d["p_dissipated_mw"] = r.p_dissipated_mw;
            d["p_electrical_mw"] = r.p_electrical_mw;
            d["mp_phi_mw"] = r.mp_phi_mw;
            d["safety_margin_mw"] = r.safety_margin_mw;
            d["safe"] = r.safe;
            d["limit_2d_mw"] = r.limit_2d_mw;
            d["limit_3d_mw"] = r.limit_3d_mw;
            d["pass_2d"] = r.pass_2d;
            d["pass_3d"] = r.pass_3d;
            return d;
        },
        py::arg("p_pupil_mw"), py::arg("lambda_nm") = 850.0);
    m.def(
        "thermal_limits",
        [](double length_mm, double width_mm, double thickness_mm, double flux) {
            const auto t = budget::thermal_limits({length_mm, width_mm, thickness_mm}, flux);
            return py::make_tuple(t.limit_2d_mw, t.limit_3d_mw);
        },
        py::arg("length_mm") = 4.6, py::arg("width_mm") = 3.7, py::arg("thickness_mm") = 0.9,
        py::arg("flux_limit_mw_mm2") = budget::kFluxLimitMwPerMm2);
    m.def("irradiance_mw_cm2", &budget::irradiance_mw_cm2, py::arg("p_mw"),
          py::arg("pupil_diameter_mm"));

    // scenario harness
    m.def(
        "simulate_nominal",
        [](const std::string& output_dir) {
            const auto bundle =
                harness::run_end_to_end(harness::Scenario::paper_nominal());
            if (!output_dir.empty())
                harness::emit(bundle, output_dir);
            py::dict d;
            d["bundle_hash"] = bundle.bundle_hash;
            d["por_latency_us"] = bundle.por_latency_us;
            d["recovered_bitrate_kbps"] = bundle.recovered_bitrate_kbps;
            d["ber_errors"] = bundle.ber.errors;
            d["ber_compared"] = bundle.ber.compared;
            d["n_pulses"] = bundle.pulses.size();
            d["plateau_v"] = bundle.pulses.empty() ? 0.0 : bundle.pulses.front().plateau_v;
            d["p_electrical_mw"] = bundle.budget.p_electrical_mw;
            return d;
        },
        py::arg("output_dir") = std::string(),
        "run the built-in nominal scenario; returns summary metrics");
}
