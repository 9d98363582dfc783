#include <doctest.h>

#include <filesystem>

#include "sco/recovery.hpp"
#include "sco/refine.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using oracle::fixture;
using oracle::fresh_dir;
using oracle::run_cli;
using oracle::slurp;

TEST_CASE("gen writes the documented formats and is byte-deterministic") {
    const auto dir = fresh_dir("gen");
    const std::string args = "gen --netlist '" + fixture("inv.net").string() +
                             "' --m 8 --seed 1 --sigma 0 --out run1";
    const auto r1 = run_cli(args, dir);
    REQUIRE(r1.exit_code == 0);

    const auto traces = slurp(dir / "run1/traces.csv");
    CHECK(traces.rfind("SCO-TRACES,v1,8,", 0) == 0);

    const auto r2 = run_cli("gen --netlist '" + fixture("inv.net").string() +
                                "' --m 8 --seed 1 --sigma 0 --out run2",
                            dir);
    REQUIRE(r2.exit_code == 0);
    CHECK(slurp(dir / "run1/netlist.net") == slurp(dir / "run2/netlist.net"));
    CHECK(slurp(dir / "run1/templates.csv") == slurp(dir / "run2/templates.csv"));
    CHECK(slurp(dir / "run1/traces.csv") == slurp(dir / "run2/traces.csv"));

    // emitted files round-trip through their parsers
    const auto c = sco::parse_netlist(slurp(dir / "run1/netlist.net"));
    CHECK(c.gate_count() == 1);
    auto ts = sco::trace_set_from_csv(traces);
    sco::conform_pairs(ts, c);
    CHECK(ts.size() == 8);
    sco::template_set_from_csv(slurp(dir / "run1/templates.csv")).validate_against(c);
}

TEST_CASE("gen rejects a zero trace count with a usage error") {
    const auto dir = fresh_dir("gen_m0");
    const auto r = run_cli("gen --netlist '" + fixture("inv.net").string() + "' --m 0", dir);
    CHECK(r.exit_code == 2);
}

TEST_CASE("recover matches the library estimate and reports the summary line") {
    const auto dir = fresh_dir("recover");
    REQUIRE(run_cli("gen --netlist '" + fixture("inv.net").string() + "' --m 32 --seed 9 --sigma 0",
                    dir)
                .exit_code == 0);

    const auto r = run_cli(
        "recover --netlist netlist.net --traces traces.csv --gate 0 --j 0 --out rec.csv", dir);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.rfind("gate=0 j=0 M=32 positives=", 0) == 0);
    CHECK(r.out.find("snr_db=n/a") != std::string::npos);
    CHECK(r.err.find("ensemble mean") != std::string::npos);

    // against the same computation done through the library
    const auto c = sco::parse_netlist(slurp(dir / "netlist.net"));
    auto ts = sco::trace_set_from_csv(slurp(dir / "traces.csv"));
    sco::conform_pairs(ts, c);
    ts = sco::subtract_ensemble_mean(std::move(ts));
    const auto expect =
        sco::estimate_response(ts, sco::compute_activation_sequence(c, ts, 0, 0));
    const auto got = sco::response_from_csv(slurp(dir / "rec.csv"));
    CHECK(got.estimate.samples == expect.estimate.samples);

    // the oracle route: partitioned accumulation scaled by 2/M
    const auto acc = oracle::partition_accumulate(
        ts, sco::compute_activation_sequence(c, ts, 0, 0).signs);
    CHECK(sco::relative_l2_error(got.estimate, sco::scaled(acc, 2.0 / 32.0)) <= 1e-9);

    // --truth produces a finite snr
    const auto rt = run_cli(
        "recover --netlist netlist.net --traces traces.csv --gate 0 --j 0 --truth templates.csv",
        dir);
    REQUIRE(rt.exit_code == 0);
    CHECK(rt.out.find("snr_db=") != std::string::npos);
    CHECK(rt.out.find("snr_db=n/a") == std::string::npos);
}

TEST_CASE("recover rejects an out-of-range transition index") {
    const auto dir = fresh_dir("recover_range");
    REQUIRE(run_cli("gen --netlist '" + fixture("inv.net").string() + "' --m 8 --seed 1", dir)
                .exit_code == 0);
    const auto r =
        run_cli("recover --netlist netlist.net --traces traces.csv --gate 0 --j 99", dir);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("99") != std::string::npos);
    CHECK(r.err.find("N_k=2") != std::string::npos);
}

TEST_CASE("ortho reports the exact self inner product") {
    const auto dir = fresh_dir("ortho");
    REQUIRE(run_cli("gen --netlist '" + fixture("c17.net").string() + "' --m 100 --seed 3", dir)
                .exit_code == 0);
    const auto r = run_cli(
        "ortho --netlist netlist.net --traces traces.csv --a-gate 2 --a-j 5 --b-gate 2 --b-j 5",
        dir);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out == "a=(2,5) b=(2,5) M=100 inner=100 normalized=1\n");
}

TEST_CASE("bisect prints the chain cut") {
    const auto dir = fresh_dir("bisect");
    const auto r = run_cli(
        "bisect --netlist '" + fixture("chain4.net").string() + "' --seed 1 --out cut.json", dir);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out == "cut=1 side_a=g0,g1 side_b=g2,g3 cut_nets=n1\n");
    const auto doc = nlohmann::json::parse(slurp(dir / "cut.json"));
    CHECK(doc["cut"] == 1);
}

TEST_CASE("probe: depth-0 voltage output integrates the recovered current") {
    const auto dir = fresh_dir("probe0");
    REQUIRE(run_cli("gen --netlist '" + fixture("inv.net").string() + "' --m 64 --seed 5", dir)
                .exit_code == 0);
    const auto r = run_cli(
        "probe --netlist netlist.net --templates templates.csv --traces traces.csv "
        "--net y --j 0 --volts --c 2e-14 --v0 0.1",
        dir);
    REQUIRE(r.exit_code == 0);
    const auto doc = nlohmann::json::parse(slurp(dir / "probe_report.json"));
    CHECK(doc["root"]["gates"].size() == 1);
    CHECK(doc["root"].contains("child") == false);

    const auto rec = sco::response_from_csv(slurp(dir / "probe_recovered.csv"));
    const auto vol = sco::response_from_csv(slurp(dir / "probe_voltage.csv"));
    const auto expect = sco::voltage_from_current(rec.estimate, {2e-14, 0.1});
    CHECK(vol.estimate.samples == expect.samples);
}

TEST_CASE("probe: chain fixture yields a two-level descent with unit cuts") {
    const auto dir = fresh_dir("probe_chain");
    REQUIRE(run_cli("gen --netlist '" + fixture("chain4.net").string() + "' --m 512 --seed 11", dir)
                .exit_code == 0);
    const auto r = run_cli(
        "probe --netlist netlist.net --templates templates.csv --traces traces.csv --net n3", dir);
    REQUIRE(r.exit_code == 0);
    const auto doc = nlohmann::json::parse(slurp(dir / "probe_report.json"));
    CHECK(doc["root"]["cut_size"] == 1);
    CHECK(doc["root"]["child"]["cut_size"] == 1);
    CHECK(doc["root"]["child"]["child"].contains("cut_size") == false);
}

TEST_CASE("probe: composite arity beyond the cap exits 3 naming level and width") {
    const auto dir = fresh_dir("probe_wide");
    REQUIRE(run_cli("gen --netlist '" + fixture("wide9.net").string() +
                        "' --m 16 --seed 2 --length 16",
                    dir)
                .exit_code == 0);
    const auto r = run_cli(
        "probe --netlist netlist.net --templates templates.csv --traces traces.csv --net t7", dir);
    CHECK(r.exit_code == 3);
    CHECK(r.err.find("arity 9") != std::string::npos);
    CHECK(r.err.find("level 0") != std::string::npos);
    // the partial report still lands on disk
    const auto doc = nlohmann::json::parse(slurp(dir / "probe_report.json"));
    CHECK(doc["complete"] == false);
    CHECK(doc["failed_arity"] == 9);
}

TEST_CASE("selftest passes and is byte-deterministic") {
    const auto dir = fresh_dir("selftest");
    const auto r1 = run_cli("selftest", dir);
    REQUIRE(r1.exit_code == 0);
    CHECK(r1.out.find("selftest: 8/8 checks passed") != std::string::npos);
    const auto r2 = run_cli("selftest", dir);
    CHECK(r1.out == r2.out);
}

TEST_CASE("every command is deterministic across runs") {
    const auto dir = fresh_dir("determinism");
    const std::string gen_args = "gen --netlist '" + fixture("c17.net").string() +
                                 "' --m 64 --seed 13 --sigma 1e-4 --out g";
    REQUIRE(run_cli(gen_args, dir).exit_code == 0);

    auto once = [&](const std::string& tag) {
        run_cli("recover --netlist g/netlist.net --traces g/traces.csv --gate 3 --j 4 --out r_" +
                    tag + ".csv",
                dir);
        run_cli("bisect --netlist g/netlist.net --seed 2 --out b_" + tag + ".json", dir);
        run_cli("probe --netlist g/netlist.net --templates g/templates.csv --traces g/traces.csv "
                "--net n22 --volts --out p_" + tag,
                dir);
    };
    once("1");
    once("2");
    CHECK(slurp(dir / "r_1.csv") == slurp(dir / "r_2.csv"));
    CHECK(slurp(dir / "b_1.json") == slurp(dir / "b_2.json"));
    CHECK(slurp(dir / "p_1/probe_report.json") == slurp(dir / "p_2/probe_report.json"));
    CHECK(slurp(dir / "p_1/probe_recovered.csv") == slurp(dir / "p_2/probe_recovered.csv"));
    CHECK(slurp(dir / "p_1/probe_voltage.csv") == slurp(dir / "p_2/probe_voltage.csv"));
}

TEST_CASE("missing subcommand or unknown flag is a usage error") {
    const auto dir = fresh_dir("usage");
    CHECK(run_cli("", dir).exit_code == 2);
    CHECK(run_cli("gen --frobnicate", dir).exit_code == 2);
    CHECK(run_cli("--help", dir).exit_code == 0);
}
