// retisim command line: scenario simulation, sweeps, budget analysis and the
// telemetry codec utilities. Exit status is nonzero on any failed verdict or
// validation error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "retisim/budget.hpp"
#include "retisim/harness.hpp"
#include "retisim/spectral.hpp"
#include "retisim/telemetry.hpp"

namespace {

using namespace retisim;

std::vector<double> parse_values(const std::string& spec) {
    // "a:b:step" range or comma-separated list
    std::vector<double> out;
    const auto colon = spec.find(':');
    if (colon != std::string::npos) {
        double lo, hi, step = 1.0;
        std::string rest = spec;
        std::replace(rest.begin(), rest.end(), ':', ' ');
        std::istringstream in(rest);
        if (!(in >> lo >> hi))
            throw ValidationError("bad range spec: " + spec);
        in >> step;
        if (step <= 0.0 || hi < lo)
            throw ValidationError("bad range spec: " + spec);
        for (double v = lo; v <= hi + 1e-9; v += step)
            out.push_back(v);
        return out;
    }
    std::string rest = spec;
    std::replace(rest.begin(), rest.end(), ',', ' ');
    std::istringstream in(rest);
    double v;
    while (in >> v)
        out.push_back(v);
    if (out.empty())
        throw ValidationError("no values in: " + spec);
    return out;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int cmd_simulate(const std::string& scenario_path, const std::string& output_dir,
                 double time_step_ns) {
    harness::Scenario s = scenario_path == "paper-nominal"
                              ? harness::Scenario::paper_nominal()
                              : harness::Scenario::from_file(scenario_path);
    if (time_step_ns > 0.0)
        s.time_step_ns = time_step_ns;
    const auto bundle = harness::run_end_to_end(s);
    const auto files = harness::emit(bundle, output_dir);
    std::printf("scenario: %s\n", bundle.scenario_name.c_str());
    std::printf("bundle_hash: %016llx\n",
                static_cast<unsigned long long>(bundle.bundle_hash));
    std::printf("por_latency_us: %.3f\n", bundle.por_latency_us);
    std::printf("recovered_bitrate_kbps: %.3f\n", bundle.recovered_bitrate_kbps);
    std::printf("ber: %zu/%zu\n", bundle.ber.errors, bundle.ber.compared);
    for (const auto& e : bundle.events)
        std::printf("event t=%10.3f us  %-12s %s\n", e.t_us, e.kind.c_str(),
                    e.detail.c_str());
    std::printf("wrote %zu files to %s\n", files.size(), output_dir.c_str());
    const auto v = budget::verdict(bundle.budget);
    if (!v.pass) {
        std::fprintf(stderr, "budget verdict failed\n");
        return 1;
    }
    if (bundle.por_latency_us < 0.0) {
        std::fprintf(stderr, "no power-on-reset observed\n");
        return 1;
    }
    return 0;
}

int cmd_power_budget(double p_pupil_mw, double lambda_nm, double pupil_diameter_mm,
                     const std::string& format, const std::string& eye_csv) {
    budget::BudgetReport r;
    if (eye_csv.empty()) {
        r = budget::power_chain(p_pupil_mw, lambda_nm);
    } else {
        auto model = spectral::SpectralModel::make_default();
        model.eye = spectral::SpectralCurve::from_csv(eye_csv);
        r = budget::power_chain(model, budget::BudgetConfig{}, p_pupil_mw, lambda_nm);
    }
    const auto v = budget::verdict(r);
    if (format == "json") {
        std::fputs(budget::to_json(r, pupil_diameter_mm).c_str(), stdout);
    } else {
        std::printf("power budget at %.1f nm\n", r.lambda_nm);
        std::printf("  %-28s %8.3f mW (limit %.3f mW, %s)\n", "at the pupil",
                    r.p_pupil_mw, r.mp_phi_mw, r.safe ? "safe" : "UNSAFE");
        std::printf("  %-28s %8.3f mW/cm2 over a %.1f mm pupil\n", "irradiance",
                    budget::irradiance_mw_cm2(r.p_pupil_mw, pupil_diameter_mm),
                    pupil_diameter_mm);
        std::printf("  %-28s %8.3f mW\n", "reaching the retina", r.p_retina_mw);
        std::printf("  %-28s %8.3f mW\n", "lost at the cell", r.p_optical_loss_mw);
        std::printf("  %-28s %8.3f mW (2D limit %.3f, 3D limit %.3f)\n",
                    "dissipated by the implant", r.p_dissipated_mw, r.limit_2d_mw,
                    r.limit_3d_mw);
        std::printf("  %-28s %8.3f mW\n", "delivered electrically", r.p_electrical_mw);
        std::printf("  safety margin %.3f mW; thermal 2D %s, 3D %s; verdict %s\n",
                    r.safety_margin_mw, r.pass_2d ? "pass" : "fail",
                    r.pass_3d ? "pass" : "fail", v.pass ? "PASS" : "FAIL");
    }
    return v.pass ? 0 : 1;
}

int cmd_optimize(double lo, double hi, double step, const std::string& format) {
    const auto res = spectral::optimum_wavelength(lo, hi, step);
    if (format == "json") {
        std::printf("{\"lambda_nm\": %.9g, \"capacity_mw\": %.9g, \"zero_capacity\": %s}\n",
                    res.lambda_nm, res.capacity_mw, res.zero_capacity ? "true" : "false");
    } else {
        if (res.zero_capacity)
            std::printf("no wavelength in [%g, %g] delivers power\n", lo, hi);
        else
            std::printf("optimum wavelength: %.1f nm, capacity %.3f mW\n", res.lambda_nm,
                        res.capacity_mw);
    }
    return res.zero_capacity ? 1 : 0;
}

int cmd_ber(std::size_t n_bits, std::uint64_t seed, double noise_mw_rms) {
    std::mt19937_64 rng(seed);
    std::vector<std::uint8_t> payload(n_bits);
    for (auto& b : payload)
        b = static_cast<std::uint8_t>(rng() & 1u);
    harness::LinkBerConfig cfg;
    cfg.seed = seed + 1;
    cfg.noise_mw_rms = noise_mw_rms;
    const auto res = harness::link_ber_run(payload, cfg);
    std::printf("bits: %zu  errors: %zu  ber: %.3g\n", res.compared, res.errors, res.ber);
    return 0;
}

int cmd_encode(int opcode, const std::string& payload_hex, const std::string& out_path) {
    telemetry::Frame f;
    f.opcode = static_cast<std::uint8_t>(opcode);
    for (std::size_t i = 0; i + 1 < payload_hex.size(); i += 2)
        f.payload.push_back(
            static_cast<std::uint8_t>(std::stoi(payload_hex.substr(i, 2), nullptr, 16)));
    const auto bits = telemetry::frame_encode(f);
    const auto hex = telemetry::bits_to_hex(bits);
    if (out_path.empty()) {
        std::printf("%s\n", hex.c_str());
    } else {
        std::ofstream out(out_path);
        out << hex << "\n";
    }
    return 0;
}

int cmd_decode(const std::string& input) {
    std::string text = input;
    if (std::ifstream(input).good())
        text = read_text(input);
    const auto bits = telemetry::bits_from_hex(text);
    const auto res = telemetry::frame_decode(bits);
    if (!res.ok()) {
        std::printf("decode error: %s\n", telemetry::frame_error_name(res.error));
        return 1;
    }
    std::printf("opcode: 0x%02X\npayload:", res.frame->opcode);
    for (auto b : res.frame->payload)
        std::printf(" %02X", b);
    std::printf("\ncrc: ok\n");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"laser-powered retinal stimulator link simulator"};
    app.require_subcommand(1);

    std::string scenario_path = "paper-nominal";
    std::string output_dir = "out";
    std::string format = "text";
    double time_step_ns = 0.0;

    auto* sim = app.add_subcommand("simulate", "run a scenario end to end");
    sim->add_option("scenario", scenario_path,
                    "scenario file, or 'paper-nominal' for the built-in");
    sim->add_option("--output-dir", output_dir, "directory for the trace bundle");
    sim->add_option("--time-step-ns", time_step_ns, "override the simulation step");

    std::string sweep_param = "lambda_nm";
    std::string sweep_values = "600:1000:25";
    auto* sw = app.add_subcommand("sweep", "sweep one parameter over a scenario");
    sw->add_option("--scenario", scenario_path, "base scenario file or 'paper-nominal'");
    sw->add_option("--param", sweep_param, "lambda_nm|p_pupil_mw|bitrate_kbps|mod_depth_mw|load_r_kohm");
    sw->add_option("--values", sweep_values, "lo:hi:step range or comma list");
    sw->add_option("--output-dir", output_dir, "directory for the sweep table");
    sw->add_option("--format", format, "stdout format: text|csv|json");

    double p_pupil_mw = 30.0, lambda_nm = 850.0, pupil_diameter_mm = 5.0;
    std::string eye_csv;
    auto* pb = app.add_subcommand("power-budget", "staged pupil-to-dissipation budget");
    pb->add_option("--p-pupil-mw", p_pupil_mw, "average power at the pupil");
    pb->add_option("--lambda-nm", lambda_nm, "wavelength");
    pb->add_option("--pupil-diameter-mm", pupil_diameter_mm, "pupil for the irradiance figure");
    pb->add_option("--format", format, "text|json");
    pb->add_option("--eye-transmission-csv", eye_csv, "replace the built-in eye curve");

    double opt_lo = 600.0, opt_hi = 1000.0, opt_step = 1.0;
    auto* ow = app.add_subcommand("optimize-wavelength", "grid argmax of delivery capacity");
    ow->add_option("--min", opt_lo, "lower wavelength bound, nm");
    ow->add_option("--max", opt_hi, "upper wavelength bound, nm");
    ow->add_option("--step", opt_step, "grid step, nm");
    ow->add_option("--format", format, "text|json");

    std::size_t ber_bits = 100000;
    std::uint64_t seed = 1;
    double noise_mw_rms = 0.0;
    auto* ber = app.add_subcommand("ber", "end-to-end link bit error rate");
    ber->add_option("--bits", ber_bits, "number of random payload bits");
    ber->add_option("--seed", seed, "payload/noise seed");
    ber->add_option("--noise-mw-rms", noise_mw_rms, "additive optical noise");

    int opcode = 0x05;
    std::string payload_hex, out_path;
    auto* enc = app.add_subcommand("encode", "build a frame and print its bit stream");
    enc->add_option("--opcode", opcode, "command opcode byte");
    enc->add_option("--payload", payload_hex, "payload bytes as hex digits");
    enc->add_option("-o,--output", out_path, "write the hex bitstream to a file");

    std::string decode_input;
    auto* dec = app.add_subcommand("decode", "decode a hex bit stream into a frame");
    dec->add_option("input", decode_input, "hex text or a file containing it")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed())
            return cmd_simulate(scenario_path, output_dir, time_step_ns);
        if (sw->parsed()) {
            harness::Scenario s = scenario_path == "paper-nominal"
                                      ? harness::Scenario::paper_nominal()
                                      : harness::Scenario::from_file(scenario_path);
            const auto table = harness::sweep(s, sweep_param, parse_values(sweep_values));
            const auto path = harness::emit(table, output_dir);
            if (format == "json")
                std::fputs(harness::to_json(table).c_str(), stdout);
            else
                std::fputs(harness::to_csv(table).c_str(), stdout);
            std::fprintf(stderr, "wrote %s\n", path.c_str());
            return 0;
        }
        if (pb->parsed())
            return cmd_power_budget(p_pupil_mw, lambda_nm, pupil_diameter_mm, format,
                                    eye_csv);
        if (ow->parsed())
            return cmd_optimize(opt_lo, opt_hi, opt_step, format);
        if (ber->parsed())
            return cmd_ber(ber_bits, seed, noise_mw_rms);
        if (enc->parsed())
            return cmd_encode(opcode, payload_hex, out_path);
        if (dec->parsed())
            return cmd_decode(decode_input);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
