#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "retisim/harness.hpp"

using namespace retisim;
using namespace retisim::harness;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

TEST_CASE("scenario parsing") {
    const char* text = R"(
# comment
name = demo
lambda_nm = 852
p_pupil_high_mw = 35
p_pupil_low_mw = 25
bitrate_kbps = 600
time_step_ns = 10
electrode_load = resistive 10
command = set_role 0 active
command = set_role 1 return
command = set_waveform amplitude_ua=250 phase1_us=500 interphase_us=20 phase2_us=500 polarity=cathodic shape=biphasic
command = trigger at_us=900
)";
    const auto s = Scenario::from_string(text);
    CHECK(s.name == "demo");
    CHECK(s.script.size() == 4);
    CHECK(s.p_pupil_mean_mw() == doctest::Approx(30.0));
    REQUIRE(s.script[3].at_us.has_value());
    CHECK(*s.script[3].at_us == doctest::Approx(900.0));
}

TEST_CASE("scenario validation failures") {
    CHECK_THROWS_AS(Scenario::from_string("p_pupil_high_mw = 5\np_pupil_low_mw = 10\n"),
                    ValidationError);
    CHECK_THROWS_AS(Scenario::from_string("unknown_key = 1\n"), ValidationError);
    CHECK_THROWS_AS(Scenario::from_string("time_step_ns = 100\n"), ValidationError);
    CHECK_THROWS_AS(Scenario::from_string("command = dance\n"), ValidationError);
    CHECK_THROWS_AS(Scenario::from_string("command = set_role 300 active\n"),
                    ValidationError);
}

TEST_CASE("nominal scenario end to end") {
    const auto bundle = run_end_to_end(Scenario::paper_nominal());

    SUBCASE("POR appears once, after rails and lock") {
        int por_count = 0;
        double t_rails = -1.0, t_por = -1.0;
        for (const auto& e : bundle.events) {
            if (e.kind == "por") {
                ++por_count;
                t_por = e.t_us;
            }
            if (e.kind == "rails_up" && t_rails < 0.0)
                t_rails = e.t_us;
        }
        CHECK(por_count == 1);
        CHECK(t_por >= t_rails);
        CHECK(bundle.por_latency_us == doctest::Approx(t_por));
    }
    SUBCASE("every scripted trigger pulses or nacks") {
        int acks = 0, nacks = 0, pulses = 0;
        for (const auto& e : bundle.events) {
            if (e.kind == "ack")
                ++acks;
            if (e.kind == "nack")
                ++nacks;
            if (e.kind == "pulse")
                ++pulses;
        }
        CHECK(acks == 4); // two roles, one waveform, one trigger
        CHECK(nacks == 0);
        CHECK(pulses == 1);
        REQUIRE(bundle.pulses.size() == 1);
        CHECK(bundle.pulses[0].plateau_v == doctest::Approx(2.70).epsilon(1e-6));
    }
    SUBCASE("link is error free and the clock is recovered") {
        CHECK(bundle.ber.errors == 0);
        CHECK(bundle.recovered_bitrate_kbps == doctest::Approx(600.0).epsilon(0.01));
    }
    SUBCASE("budget power matches the trace within two percent") {
        // average electrical power delivered to the DC load over the settled
        // portion of the trace
        const auto& pv = bundle.pv;
        const std::size_t start = pv.size() / 4;
        double sum = 0.0;
        for (std::size_t i = start; i < pv.size(); ++i)
            sum += pv.voltage_v[i] * pv.current_ma[i];
        const double mean_trace = sum / static_cast<double>(pv.size() - start);
        CHECK(mean_trace ==
              doctest::Approx(bundle.budget.p_electrical_mw).epsilon(0.02));
    }
    SUBCASE("dc rail settles near the differential swing") {
        CHECK(bundle.dc_rail_v.samples.back() > 3.0);
    }
}

TEST_CASE("unpowered scenario produces no events") {
    Scenario s = Scenario::paper_nominal();
    s.p_pupil_high_mw = 3.0;
    s.p_pupil_low_mw = 2.0; // far too weak to reach the rail threshold
    const auto bundle = run_end_to_end(s);
    CHECK(bundle.por_latency_us < 0.0);
    for (const auto& e : bundle.events)
        CHECK(e.kind != "por");
    CHECK(bundle.pulses.empty());
}

TEST_CASE("determinism: equal scenarios give byte-identical bundles") {
    const auto a = run_end_to_end(Scenario::paper_nominal());
    const auto b = run_end_to_end(Scenario::paper_nominal());
    CHECK(a.bundle_hash == b.bundle_hash);

    const std::string dir_a = "trace_det_a";
    const std::string dir_b = "trace_det_b";
    const auto files_a = emit(a, dir_a);
    const auto files_b = emit(b, dir_b);
    REQUIRE(files_a.size() == files_b.size());
    for (std::size_t i = 0; i < files_a.size(); ++i)
        CHECK(slurp(files_a[i]) == slurp(files_b[i]));
    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);
}

TEST_CASE("seeded noise is reproducible and off by default") {
    Scenario s = Scenario::paper_nominal();
    s.noise_mw_rms = 0.5;
    s.seed = 42;
    const auto a = run_end_to_end(s);
    const auto b = run_end_to_end(s);
    CHECK(a.bundle_hash == b.bundle_hash);
    s.seed = 43;
    const auto c = run_end_to_end(s);
    CHECK(a.bundle_hash != c.bundle_hash);
}

TEST_CASE("emit writes the documented bundle layout") {
    const auto bundle = run_end_to_end(Scenario::paper_nominal());
    const std::string dir = "trace_emit_test";
    const auto files = emit(bundle, dir);
    auto has = [&](const char* name) {
        return std::filesystem::exists(std::filesystem::path(dir) / name);
    };
    CHECK(has("optical_pupil.csv"));
    CHECK(has("optical_cell.csv"));
    CHECK(has("pv.csv"));
    CHECK(has("sense.csv"));
    CHECK(has("pair_p.csv"));
    CHECK(has("pair_n.csv"));
    CHECK(has("dc_rail.csv"));
    CHECK(has("clock_edges.csv"));
    CHECK(has("electrode_000_pulse.csv"));
    CHECK(has("events.json"));
    CHECK(has("budget.json"));
    CHECK(has("manifest.json"));
    // header row on a waveform file
    const auto pv = slurp((std::filesystem::path(dir) / "pv.csv").string());
    CHECK(pv.rfind("time_ns,voltage_v,current_ma\n", 0) == 0);
    (void)files;
    std::filesystem::remove_all(dir);
}

TEST_CASE("sweeps") {
    Scenario s = Scenario::paper_nominal();
    s.script.clear(); // keep the rows fast: power/clock metrics only
    s.tail_margin_us = 50.0;

    SUBCASE("wavelength sweep peaks at the optimum") {
        std::vector<double> values;
        for (double v = 700.0; v <= 1000.0; v += 25.0)
            values.push_back(v);
        const auto table = sweep(s, "lambda_nm", values);
        REQUIRE(table.rows.size() == values.size());
        double best_v = 0.0, best_cap = -1.0;
        for (const auto& r : table.rows) {
            if (r.capacity_mw > best_cap) {
                best_cap = r.capacity_mw;
                best_v = r.value;
            }
        }
        CHECK(best_v == doctest::Approx(850.0));
        // past the bandgap the PV is dead: no POR
        CHECK(table.rows.back().por_latency_us < 0.0);
    }
    SUBCASE("pupil power sweep has monotone electrical power") {
        const auto table = sweep(s, "p_pupil_mw", {10.0, 15.0, 20.0, 25.0, 30.0, 36.5});
        for (std::size_t i = 1; i < table.rows.size(); ++i)
            CHECK(table.rows[i].p_electrical_mw > table.rows[i - 1].p_electrical_mw);
    }
    SUBCASE("empty value list gives an empty table") {
        CHECK(sweep(s, "lambda_nm", {}).rows.empty());
    }
    SUBCASE("unknown parameter is rejected") {
        CHECK_THROWS_AS(sweep(s, "nonsense", {1.0}), ValidationError);
    }
    SUBCASE("csv rendering") {
        const auto table = sweep(s, "lambda_nm", {850.0});
        const auto csv = to_csv(table);
        CHECK(csv.rfind("lambda_nm,", 0) == 0);
        CHECK(csv.find("\n850,") != std::string::npos);
    }
}

TEST_CASE("streamed link BER is clean without noise") {
    std::mt19937_64 rng(2024);
    std::vector<std::uint8_t> payload(20000);
    for (auto& b : payload)
        b = static_cast<std::uint8_t>(rng() & 1u);
    LinkBerConfig cfg;
    const auto res = link_ber_run(payload, cfg);
    CHECK(res.compared == payload.size());
    CHECK(res.errors == 0);
}

TEST_CASE("heavy noise produces errors, deterministically") {
    std::mt19937_64 rng(7);
    std::vector<std::uint8_t> payload(4000);
    for (auto& b : payload)
        b = static_cast<std::uint8_t>(rng() & 1u);
    LinkBerConfig cfg;
    cfg.noise_mw_rms = 6.0; // swamps the 8 mW modulation depth
    cfg.seed = 9;
    const auto a = link_ber_run(payload, cfg);
    const auto b = link_ber_run(payload, cfg);
    CHECK(a.errors == b.errors);
    CHECK(a.errors > 0);
}
