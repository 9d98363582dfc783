// sco: side-channel oscilloscope workbench.
//
// Batch pipeline: synthesize power traces of a combinational netlist from
// per-gate step current responses (gen), recover a single gate transition's
// response from the aggregate traces (recover), inspect activation
// orthogonality (ortho), bisect the gate graph (bisect), and descend by
// recursive min-cut refinement to a single net's voltage waveform (probe).
//
// Exit codes: 0 success, 2 usage/validation, 3 model-capacity failure,
// 1 internal error. SCO_THREADS caps worker parallelism (0 = auto).

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sco/logicsim.hpp"
#include "sco/netlist.hpp"
#include "sco/powermodel.hpp"
#include "sco/recovery.hpp"
#include "sco/refine.hpp"
#include "sco/waveform.hpp"

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw sco::error(sco::errc::io, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Outputs are staged as .tmp siblings and renamed on commit, so a failing run
// leaves no partial files behind.
class staged_writer {
  public:
    ~staged_writer() {
        for (const auto& p : staged_) {
            std::error_code ec;
            fs::remove(tmp_of(p), ec);
        }
    }

    void stage(const fs::path& path, const std::string& content) {
        if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
        std::ofstream out(tmp_of(path), std::ios::binary | std::ios::trunc);
        if (!out) throw sco::error(sco::errc::io, "cannot write '" + path.string() + "'");
        out << content;
        out.close();
        if (!out) throw sco::error(sco::errc::io, "short write to '" + path.string() + "'");
        staged_.push_back(path);
    }

    void commit() {
        for (const auto& p : staged_) fs::rename(tmp_of(p), p);
        staged_.clear();
    }

  private:
    static fs::path tmp_of(const fs::path& p) { return fs::path(p.string() + ".tmp"); }
    std::vector<fs::path> staged_;
};

sco::circuit load_circuit(const std::string& path) {
    return sco::parse_netlist(read_file(path));
}

sco::trace_set load_traces(const std::string& path, const sco::circuit& c) {
    sco::trace_set ts = sco::trace_set_from_csv(read_file(path));
    sco::conform_pairs(ts, c);
    return ts;
}

std::string join_names(const sco::circuit& c, const std::vector<int>& ids, bool nets) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ',';
        out += nets ? c.nets()[ids[i]].name : c.gates()[ids[i]].name;
    }
    return out;
}

struct gen_config {
    std::string netlist;
    std::string out_dir = ".";
    std::size_t m = 16;
    std::uint64_t seed = 1;
    double sigma = 0.0;
    double dt = 1e-10;
    std::size_t length = 64;
    double i0 = 1e-3;
    double tau1 = 2e-9;
    double tau2 = 5e-10;
};

int cmd_gen(const gen_config& cfg) {
    const sco::circuit c = load_circuit(cfg.netlist);
    const auto templates = sco::gate_template_set::synthesize(
        c, {cfg.i0, cfg.tau1, cfg.tau2}, cfg.dt, cfg.length, cfg.seed);
    const auto traces = sco::generate_trace_set(c, templates, sco::prng_pair_source{cfg.seed, cfg.m},
                                                sco::noise_spec{cfg.sigma, cfg.seed});

    staged_writer w;
    const fs::path dir(cfg.out_dir);
    w.stage(dir / "netlist.net", sco::serialize_netlist(c));
    w.stage(dir / "templates.csv", sco::template_set_to_csv(templates));
    w.stage(dir / "traces.csv", sco::trace_set_to_csv(traces));
    w.commit();
    std::cout << "wrote " << (dir / "netlist.net").string() << "\n"
              << "wrote " << (dir / "templates.csv").string() << "\n"
              << "wrote " << (dir / "traces.csv").string() << " (M=" << cfg.m
              << ", length=" << cfg.length << ")\n";
    return 0;
}

struct recover_config {
    std::string netlist;
    std::string traces;
    int gate = 0;
    std::int64_t j = 0;
    std::string truth;
    std::string out = "recovered.csv";
};

int cmd_recover(const recover_config& cfg) {
    const sco::circuit c = load_circuit(cfg.netlist);
    sco::trace_set ts = load_traces(cfg.traces, c);
    if (!ts.mean_removed) {
        std::cerr << "note: removing per-sample ensemble mean across M=" << ts.size() << " traces\n";
        ts = sco::subtract_ensemble_mean(std::move(ts));
    }
    const auto seq = sco::compute_activation_sequence(c, ts, cfg.gate, cfg.j);
    auto recovered = sco::estimate_response(ts, seq);

    if (!cfg.truth.empty()) {
        const auto templates = sco::template_set_from_csv(read_file(cfg.truth));
        templates.validate_against(c);
        const auto truth = sco::mean_removed_truth(c, templates, ts.pairs, cfg.gate, cfg.j);
        recovered.snr_db = sco::snr_report(recovered.estimate, truth);
    }

    staged_writer w;
    w.stage(cfg.out, sco::recovered_to_csv(recovered));
    w.commit();

    std::cout << "gate=" << cfg.gate << " j=" << cfg.j << " M=" << recovered.trace_count
              << " positives=" << recovered.positives << " snr_db="
              << (recovered.snr_db ? sco::format_double(*recovered.snr_db) : std::string("n/a"))
              << "\n";
    return 0;
}

struct ortho_config {
    std::string netlist;
    std::string traces;
    int a_gate = 0;
    std::int64_t a_j = 0;
    int b_gate = 0;
    std::int64_t b_j = 0;
};

int cmd_ortho(const ortho_config& cfg) {
    const sco::circuit c = load_circuit(cfg.netlist);
    const sco::trace_set ts = load_traces(cfg.traces, c);
    const auto rep = sco::empirical_orthogonality(c, ts.pairs, {cfg.a_gate, cfg.a_j},
                                                  {cfg.b_gate, cfg.b_j});
    std::cout << "a=(" << cfg.a_gate << "," << cfg.a_j << ") b=(" << cfg.b_gate << "," << cfg.b_j
              << ") M=" << ts.size() << " inner=" << rep.inner
              << " normalized=" << sco::format_double(rep.normalized) << "\n";
    return 0;
}

struct bisect_config {
    std::string netlist;
    std::uint64_t seed = 1;
    int restarts = 8;
    std::string out;
};

int cmd_bisect(const bisect_config& cfg) {
    const sco::circuit c = load_circuit(cfg.netlist);
    const auto part = sco::min_cut_bisect(c, {}, cfg.seed, cfg.restarts);
    std::cout << "cut=" << part.cut_size() << " side_a=" << join_names(c, part.side_a, false)
              << " side_b=" << join_names(c, part.side_b, false)
              << " cut_nets=" << join_names(c, part.cut_nets, true) << "\n";
    if (!cfg.out.empty()) {
        nlohmann::ordered_json doc;
        doc["cut"] = part.cut_size();
        auto fill = [&](const std::vector<int>& ids, bool nets) {
            auto arr = nlohmann::ordered_json::array();
            for (int id : ids) arr.push_back(nets ? c.nets()[id].name : c.gates()[id].name);
            return arr;
        };
        doc["side_a"] = fill(part.side_a, false);
        doc["side_b"] = fill(part.side_b, false);
        doc["cut_nets"] = fill(part.cut_nets, true);
        staged_writer w;
        w.stage(cfg.out, doc.dump(2) + "\n");
        w.commit();
    }
    return 0;
}

struct probe_config {
    std::string netlist;
    std::string templates;
    std::string traces;
    std::size_t m = 0;
    std::uint64_t seed = 1;
    double sigma = 0.0;
    std::string net;
    std::int64_t j = -1;
    bool volts = false;
    double capacitance = 1e-14;
    double v0 = 0.0;
    std::string out_dir = ".";
    int cap = sco::default_arity_cap;
    int restarts = 8;
    std::uint64_t partition_seed = 1;
};

int cmd_probe(const probe_config& cfg) {
    const sco::circuit c = load_circuit(cfg.netlist);
    const auto templates = sco::template_set_from_csv(read_file(cfg.templates));
    templates.validate_against(c);

    sco::trace_set ts;
    if (!cfg.traces.empty()) {
        ts = load_traces(cfg.traces, c);
    } else {
        if (cfg.m < 1)
            throw sco::error(sco::errc::validation, "either --traces or --m is required");
        ts = sco::generate_trace_set(c, templates, sco::prng_pair_source{cfg.seed, cfg.m},
                                     sco::noise_spec{cfg.sigma, cfg.seed});
    }

    sco::probe_options opt;
    opt.partition_seed = cfg.partition_seed;
    opt.restarts = cfg.restarts;
    opt.arity_cap = cfg.cap;
    if (cfg.j >= 0) opt.leaf_transition = cfg.j;

    const auto result = sco::probe_net(c, templates, ts, cfg.net, opt);

    staged_writer w;
    const fs::path dir(cfg.out_dir);
    w.stage(dir / "probe_report.json", sco::probe_report_json(result, c));
    if (result.complete) {
        const auto& leaf = result.leaf();
        w.stage(dir / "probe_recovered.csv", sco::recovered_to_csv(leaf));
        if (cfg.volts) {
            const auto v = sco::voltage_from_current(leaf.estimate, {cfg.capacitance, cfg.v0});
            w.stage(dir / "probe_voltage.csv", sco::voltage_to_csv(leaf, v));
        }
    }
    w.commit();

    if (!result.complete) {
        std::cerr << "error: composite arity " << result.failed_arity << " exceeds cap " << cfg.cap
                  << " at level " << result.failed_level << "\n";
        return 3;
    }
    const auto& leaf_level = result.levels.back();
    std::cout << "net=" << result.net_name << " driver=" << c.gates()[result.driver_gate].name
              << " j=" << result.leaf_transition << " levels=" << result.levels.size()
              << " leaf_snr_db="
              << (leaf_level.snr_db ? sco::format_double(*leaf_level.snr_db) : std::string("n/a"))
              << "\n";
    return 0;
}

// --- selftest ---------------------------------------------------------------

constexpr const char* kInvNetlist = "input a\noutput y\ngate g0 INV a -> y\n";

constexpr const char* kChainNetlist =
    "input a\n"
    "output n3\n"
    "gate g0 INV a -> n0\n"
    "gate g1 INV n0 -> n1\n"
    "gate g2 INV n1 -> n2\n"
    "gate g3 INV n2 -> n3\n";

constexpr const char* kC17Netlist =
    "# c17-style NAND-only benchmark\n"
    "input n1\n"
    "input n2\n"
    "input n3\n"
    "input n6\n"
    "input n7\n"
    "output n22\n"
    "output n23\n"
    "gate g10 NAND2 n1 n3 -> n10\n"
    "gate g11 NAND2 n3 n6 -> n11\n"
    "gate g16 NAND2 n2 n11 -> n16\n"
    "gate g19 NAND2 n11 n7 -> n19\n"
    "gate g22 NAND2 n10 n16 -> n22\n"
    "gate g23 NAND2 n16 n19 -> n23\n";

int cmd_selftest() {
    int passed = 0, total = 0;
    auto check = [&](const char* name, bool ok) {
        ++total;
        passed += ok;
        std::cout << (ok ? "ok " : "FAIL ") << name << "\n";
    };

    const auto inv = sco::parse_netlist(kInvNetlist);
    check("netlist round-trip",
          sco::structurally_equal(inv, sco::parse_netlist(sco::serialize_netlist(inv))));

    const auto c17 = sco::parse_netlist(kC17Netlist);
    {
        const auto values = sco::evaluate(c17, sco::input_vector::from_value(0x1f, 5));
        const bool ok = values[c17.find_net("n22")] == 1 && values[c17.find_net("n23")] == 0;
        check("c17 all-ones evaluation", ok && c17.gate_count() == 6 && c17.width() == 5);
    }

    check("transition alphabet sizes", sco::transition_alphabet_size(inv, 0) == 2 &&
                                           sco::transition_alphabet_size(c17, 0) == 12);

    {
        // Balanced exhaustive design on one inverter: the estimator must return
        // the active template minus the ensemble mean of the responses.
        const double dt = 1e-10;
        const std::size_t len = 32;
        auto rise = sco::make_template({1e-3, 2e-9, 5e-10}, dt, len);
        auto fall = sco::make_template({7e-4, 3e-9, 6e-10}, dt, len);
        auto templates = sco::gate_template_set::from_parts({{rise, fall}}, dt, len);
        std::vector<sco::transition_pair> pairs;
        for (int rep = 0; rep < 2; ++rep)
            for (int prev = 0; prev < 2; ++prev)
                for (int cur = 0; cur < 2; ++cur)
                    pairs.push_back({sco::input_vector::from_value(prev, 1),
                                     sco::input_vector::from_value(cur, 1)});
        const auto ts = sco::subtract_ensemble_mean(
            sco::generate_trace_set(inv, templates, pairs, {0.0, 0}));
        const auto est =
            sco::estimate_response(ts, sco::compute_activation_sequence(inv, ts, 0, 0));
        sco::waveform expect = rise;
        sco::add_scaled(expect, rise + fall, -0.25);
        check("inverter recovery", sco::relative_l2_error(est.estimate, expect) < 1e-12);

        const auto probe = sco::probe_net(inv, templates, ts, "y", {});
        check("probe depth-0 equals direct recovery",
              probe.complete && probe.leaf().estimate.samples == est.estimate.samples);
    }

    {
        std::vector<sco::transition_pair> pairs;
        for (std::size_t i = 0; i < 256; ++i) pairs.push_back(sco::uniform_pair(c17, 7, i));
        const auto rep = sco::empirical_orthogonality(c17, pairs, {2, 3}, {2, 3});
        check("self-orthogonality equals M", rep.inner == 256);
    }

    {
        const auto chain = sco::parse_netlist(kChainNetlist);
        const auto part = sco::min_cut_bisect(chain, {}, 1, 8);
        check("chain bisection cuts one net",
              part.cut_size() == 1 && part.side_a == std::vector<int>({0, 1}) &&
                  part.side_b == std::vector<int>({2, 3}));
    }

    {
        const double tau = 1e-9, dt = tau / 50.0, i0 = 1e-3, cap = 1e-14;
        sco::waveform current = sco::waveform::zeros(200, dt);
        for (std::size_t m = 0; m < current.size(); ++m)
            current.samples[m] = i0 * std::exp(-static_cast<double>(m) * dt / tau);
        const auto v = sco::voltage_from_current(current, {cap, 0.0});
        bool ok = true;
        for (std::size_t m = 1; m < v.size(); ++m) {
            const double t = static_cast<double>(m) * dt;
            const double closed = i0 * tau / cap * (1.0 - std::exp(-t / tau));
            if (std::abs(v.samples[m] - closed) > 0.01 * closed) ok = false;
        }
        check("trapezoidal voltage integration", ok);
    }

    std::cout << "selftest: " << passed << "/" << total << " checks passed\n";
    return passed == total ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sco: synthesize gate-level power traces and recover per-net step responses"};
    app.require_subcommand(1);
    app.footer("Environment: SCO_THREADS caps worker parallelism (0 = auto).");

    gen_config gen;
    auto* sub_gen = app.add_subcommand("gen", "generate netlist, template and trace-set files");
    sub_gen->add_option("--netlist", gen.netlist, "netlist file")->required()->check(CLI::ExistingFile);
    sub_gen->add_option("--out", gen.out_dir, "output directory");
    sub_gen->add_option("--m", gen.m, "number of traces")->check(CLI::PositiveNumber);
    sub_gen->add_option("--seed", gen.seed, "PRNG seed for pairs, noise and templates");
    sub_gen->add_option("--sigma", gen.sigma, "noise std-dev in amperes")->check(CLI::NonNegativeNumber);
    sub_gen->add_option("--dt", gen.dt, "sample period in seconds")->check(CLI::PositiveNumber);
    sub_gen->add_option("--length", gen.length, "samples per trace")->check(CLI::PositiveNumber);
    sub_gen->add_option("--i0", gen.i0, "base template peak current");
    sub_gen->add_option("--tau1", gen.tau1, "base template fall time constant");
    sub_gen->add_option("--tau2", gen.tau2, "base template rise time constant");

    recover_config rec;
    auto* sub_rec = app.add_subcommand("recover", "recover one gate transition's step response");
    sub_rec->add_option("--netlist", rec.netlist, "netlist file")->required()->check(CLI::ExistingFile);
    sub_rec->add_option("--traces", rec.traces, "trace-set file")->required()->check(CLI::ExistingFile);
    sub_rec->add_option("--gate", rec.gate, "target gate id")->required();
    sub_rec->add_option("--j", rec.j, "target transition index")->required();
    sub_rec->add_option("--truth", rec.truth, "template file for SNR reporting")->check(CLI::ExistingFile);
    sub_rec->add_option("--out", rec.out, "recovered-response CSV path");

    ortho_config ort;
    auto* sub_ort = app.add_subcommand("ortho", "empirical orthogonality of two activations");
    sub_ort->add_option("--netlist", ort.netlist, "netlist file")->required()->check(CLI::ExistingFile);
    sub_ort->add_option("--traces", ort.traces, "trace-set file supplying the pair list")
        ->required()
        ->check(CLI::ExistingFile);
    sub_ort->add_option("--a-gate", ort.a_gate, "first target gate id")->required();
    sub_ort->add_option("--a-j", ort.a_j, "first target transition")->required();
    sub_ort->add_option("--b-gate", ort.b_gate, "second target gate id")->required();
    sub_ort->add_option("--b-j", ort.b_j, "second target transition")->required();

    bisect_config bis;
    auto* sub_bis = app.add_subcommand("bisect", "balanced min-cut bisection of the gate graph");
    sub_bis->add_option("--netlist", bis.netlist, "netlist file")->required()->check(CLI::ExistingFile);
    sub_bis->add_option("--seed", bis.seed, "partitioning seed");
    sub_bis->add_option("--restarts", bis.restarts, "independent KL restarts")->check(CLI::PositiveNumber);
    sub_bis->add_option("--out", bis.out, "optional JSON report path");

    probe_config prb;
    auto* sub_prb = app.add_subcommand("probe", "recursive refinement down to a single net");
    sub_prb->add_option("--netlist", prb.netlist, "netlist file")->required()->check(CLI::ExistingFile);
    sub_prb->add_option("--templates", prb.templates, "template file")->required()->check(CLI::ExistingFile);
    sub_prb->add_option("--traces", prb.traces, "trace-set file")->check(CLI::ExistingFile);
    sub_prb->add_option("--m", prb.m, "trace count when synthesizing internally");
    sub_prb->add_option("--seed", prb.seed, "trace synthesis seed");
    sub_prb->add_option("--sigma", prb.sigma, "noise std-dev when synthesizing internally")
        ->check(CLI::NonNegativeNumber);
    sub_prb->add_option("--net", prb.net, "target net name")->required();
    sub_prb->add_option("--j", prb.j, "leaf transition index (default: most frequent)");
    sub_prb->add_flag("--volts", prb.volts, "also integrate the leaf current into a voltage CSV");
    sub_prb->add_option("--c", prb.capacitance, "load capacitance in farads")->check(CLI::PositiveNumber);
    sub_prb->add_option("--v0", prb.v0, "initial node voltage in volts");
    sub_prb->add_option("--out", prb.out_dir, "output directory");
    sub_prb->add_option("--cap", prb.cap, "composite arity cap")->check(CLI::PositiveNumber);
    sub_prb->add_option("--restarts", prb.restarts, "KL restarts per level")->check(CLI::PositiveNumber);
    sub_prb->add_option("--partition-seed", prb.partition_seed, "KL seed");

    auto* sub_self = app.add_subcommand("selftest", "run the built-in fixture checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sub_gen->parsed()) return cmd_gen(gen);
        if (sub_rec->parsed()) return cmd_recover(rec);
        if (sub_ort->parsed()) return cmd_ortho(ort);
        if (sub_bis->parsed()) return cmd_bisect(bis);
        if (sub_prb->parsed()) return cmd_probe(prb);
        if (sub_self->parsed()) return cmd_selftest();
    } catch (const sco::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == sco::errc::capacity ? 3 : 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
