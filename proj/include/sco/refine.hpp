#pragma once

// Recursive refinement: balanced min-cut bisection of the gate graph, composite
// blocks over boundary nets, descent to a single net, and current-to-voltage
// integration at the leaf.
//
// Descent policy: at each level the side containing the target net's driver is
// kept and bisected again; the sibling side's activity is not controlled, it is
// left as interference and quantified by the per-level SNR.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sco/logicsim.hpp"
#include "sco/netlist.hpp"
#include "sco/parallel.hpp"
#include "sco/powermodel.hpp"
#include "sco/recovery.hpp"
#include "sco/rng.hpp"
#include "sco/waveform.hpp"

namespace sco {

struct partition {
    std::vector<int> side_a;    // sorted gate ids; the side holding the smallest id
    std::vector<int> side_b;
    std::vector<int> cut_nets;  // sorted net ids crossing the two sides

    int cut_size() const { return static_cast<int>(cut_nets.size()); }
};

// A net crosses when its driver gate and at least one sink gate sit on opposite
// sides. Nets driven by primary inputs belong to neither side and never cross.
inline std::vector<int> crossing_nets(const circuit& c, std::span<const int> side_a,
                                      std::span<const int> side_b) {
    std::vector<std::int8_t> side(c.gate_count(), 0);
    for (int g : side_a) side[g] = 1;
    for (int g : side_b) side[g] = 2;
    std::vector<int> cut;
    for (int n = 0; n < c.net_count(); ++n) {
        const int driver = c.nets()[n].driver_gate;
        if (driver < 0 || side[driver] == 0) continue;
        for (int sink : c.nets()[n].sinks) {
            if (side[sink] != 0 && side[sink] != side[driver]) {
                cut.push_back(n);
                break;
            }
        }
    }
    return cut;
}

namespace detail {

struct block_graph {
    std::vector<int> gates;                   // sorted member gate ids
    std::vector<std::vector<int>> edges;      // hyperedges as local gate indices
    std::vector<std::vector<int>> incident;   // per local gate, edge indices

    int size() const { return static_cast<int>(gates.size()); }
};

inline block_graph make_block_graph(const circuit& c, std::span<const int> block) {
    block_graph g;
    g.gates.assign(block.begin(), block.end());
    std::sort(g.gates.begin(), g.gates.end());
    std::vector<int> local(c.gate_count(), -1);
    for (int i = 0; i < g.size(); ++i) local[g.gates[i]] = i;

    g.incident.resize(g.gates.size());
    for (int i = 0; i < g.size(); ++i) {
        const int out = c.gates()[g.gates[i]].output;
        std::vector<int> members{i};
        for (int sink : c.nets()[out].sinks)
            if (local[sink] >= 0 && local[sink] != i) members.push_back(local[sink]);
        std::sort(members.begin() + 1, members.end());
        members.erase(std::unique(members.begin(), members.end()), members.end());
        if (members.size() < 2) continue;  // the net stays inside one gate's pocket
        const int e = static_cast<int>(g.edges.size());
        for (int m : members) g.incident[m].push_back(e);
        g.edges.push_back(std::move(members));
    }
    return g;
}

inline bool edge_spans(const std::vector<int>& edge, const std::vector<std::int8_t>& in_a) {
    bool a = false, b = false;
    for (int m : edge) (in_a[m] ? a : b) = true;
    return a && b;
}

// Exact cut change for swapping local gates a (in A) and b (in B).
inline int swap_delta(const block_graph& g, std::vector<std::int8_t>& in_a, int a, int b) {
    int before = 0, after = 0;
    auto visit = [&](int e) {
        before += edge_spans(g.edges[e], in_a);
        in_a[a] = 0;
        in_a[b] = 1;
        after += edge_spans(g.edges[e], in_a);
        in_a[a] = 1;
        in_a[b] = 0;
    };
    for (int e : g.incident[a]) visit(e);
    for (int e : g.incident[b]) {
        bool shared = false;
        for (int ea : g.incident[a])
            if (ea == e) { shared = true; break; }
        if (!shared) visit(e);
    }
    return after - before;
}

}  // namespace detail

// One Kernighan-Lin run: seeded random balanced start, pass-based pairwise
// improvement with best-prefix rollback, repeated until a pass yields nothing.
inline partition min_cut_bisect(const circuit& c, std::span<const int> block, std::uint64_t seed) {
    std::vector<int> all;
    if (block.empty()) {
        all.resize(c.gate_count());
        for (int g = 0; g < c.gate_count(); ++g) all[g] = g;
        block = all;
    }
    if (block.size() < 2)
        throw error(errc::validation, "bisection needs at least 2 gates, block has " +
                                          std::to_string(block.size()));
    const auto g = detail::make_block_graph(c, block);
    const int n = g.size();

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    splitmix64 rng(mix_seed(seed, 11, 0));
    for (int i = n - 1; i > 0; --i)
        std::swap(order[i], order[rng.next_below(static_cast<std::uint64_t>(i + 1))]);

    const int size_a = (n + 1) / 2;
    std::vector<std::int8_t> in_a(n, 0);
    for (int i = 0; i < size_a; ++i) in_a[order[i]] = 1;

    for (;;) {
        std::vector<std::int8_t> locked(n, 0);
        struct move { int a, b, gain; };
        std::vector<move> moves;
        int cum = 0, best_cum = 0;
        std::size_t best_prefix = 0;

        const int steps = std::min(size_a, n - size_a);
        for (int s = 0; s < steps; ++s) {
            int best_a = -1, best_b = -1, best_gain = 0;
            bool have = false;
            for (int a = 0; a < n; ++a) {
                if (!in_a[a] || locked[a]) continue;
                for (int b = 0; b < n; ++b) {
                    if (in_a[b] || locked[b]) continue;
                    const int gain = -detail::swap_delta(g, in_a, a, b);
                    if (!have || gain > best_gain) {
                        have = true;
                        best_gain = gain;
                        best_a = a;
                        best_b = b;
                    }
                }
            }
            if (!have) break;
            in_a[best_a] = 0;
            in_a[best_b] = 1;
            locked[best_a] = locked[best_b] = 1;
            cum += best_gain;
            moves.push_back({best_a, best_b, best_gain});
            if (cum > best_cum) {
                best_cum = cum;
                best_prefix = moves.size();
            }
        }

        // Roll back past the best prefix; an empty best prefix undoes the pass.
        for (std::size_t i = moves.size(); i > best_prefix; --i) {
            in_a[moves[i - 1].a] = 1;
            in_a[moves[i - 1].b] = 0;
        }
        if (best_cum <= 0) break;
    }

    partition p;
    for (int i = 0; i < n; ++i) (in_a[i] ? p.side_a : p.side_b).push_back(g.gates[i]);
    if (p.side_b.empty() || (!p.side_a.empty() && p.side_b.front() < p.side_a.front()))
        std::swap(p.side_a, p.side_b);
    p.cut_nets = crossing_nets(c, p.side_a, p.side_b);
    return p;
}

// Best of `restarts` independent KL runs, selected by (cut size, restart index).
inline partition min_cut_bisect(const circuit& c, std::span<const int> block, std::uint64_t seed,
                                int restarts) {
    if (restarts < 1) throw error(errc::validation, "restarts must be >= 1");
    std::vector<std::optional<partition>> results(restarts);
    std::vector<int> owned(block.begin(), block.end());
    parallel_chunks(static_cast<std::size_t>(restarts), 1,
                    [&](std::size_t begin, std::size_t end, std::size_t) {
                        for (std::size_t r = begin; r < end; ++r)
                            results[r] = min_cut_bisect(c, owned, mix_seed(seed, 13, r));
                    });
    std::size_t best = 0;
    for (std::size_t r = 1; r < results.size(); ++r)
        if (results[r]->cut_size() < results[best]->cut_size()) best = r;
    return std::move(*results[best]);
}

// A sub-circuit viewed as one gate over its boundary nets: primary inputs
// feeding the block first (in declaration order), then externally driven nets
// in net-id order.
struct composite_block {
    std::vector<int> gates;            // sorted member gate ids
    std::vector<int> boundary_inputs;  // net ids, position i = bit i of the composite vector

    int arity() const { return static_cast<int>(boundary_inputs.size()); }
};

inline composite_block make_composite_block(const circuit& c, std::span<const int> block) {
    if (block.empty()) throw error(errc::validation, "composite block must hold at least one gate");
    composite_block cb;
    cb.gates.assign(block.begin(), block.end());
    std::sort(cb.gates.begin(), cb.gates.end());
    std::vector<std::int8_t> member(c.gate_count(), 0);
    for (int g : cb.gates) {
        check_gate_id(c, g);
        member[g] = 1;
    }
    std::vector<std::int8_t> seen(c.net_count(), 0);
    std::vector<std::pair<int, int>> pi_nets;     // (pi_index, net)
    std::vector<int> external_nets;
    for (int g : cb.gates) {
        for (int in : c.gates()[g].inputs) {
            if (seen[in]) continue;
            seen[in] = 1;
            const net& n = c.nets()[in];
            if (n.pi_index >= 0)
                pi_nets.emplace_back(n.pi_index, in);
            else if (!member[n.driver_gate])
                external_nets.push_back(in);
        }
    }
    std::sort(pi_nets.begin(), pi_nets.end());
    std::sort(external_nets.begin(), external_nets.end());
    for (auto& [idx, net_id] : pi_nets) cb.boundary_inputs.push_back(net_id);
    for (int net_id : external_nets) cb.boundary_inputs.push_back(net_id);
    return cb;
}

inline void check_composite_arity(const composite_block& cb, int arity_cap) {
    if (cb.arity() > arity_cap)
        throw error(errc::capacity, "composite arity " + std::to_string(cb.arity()) + " exceeds cap " +
                                        std::to_string(arity_cap));
    if (cb.arity() < 1)
        throw error(errc::validation, "composite block has no boundary inputs");
}

inline std::uint64_t boundary_value(const composite_block& cb,
                                    const std::vector<std::uint8_t>& net_values) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < cb.boundary_inputs.size(); ++i)
        v |= std::uint64_t{net_values[cb.boundary_inputs[i]]} << i;
    return v;
}

// Net values implied by a boundary assignment; every non-boundary input of a
// member gate is driven inside the block, so the closure is well defined.
inline std::vector<std::uint8_t> evaluate_block(const circuit& c, const composite_block& cb,
                                                std::uint64_t boundary) {
    std::vector<std::uint8_t> values(c.net_count(), 0);
    for (std::size_t i = 0; i < cb.boundary_inputs.size(); ++i)
        values[cb.boundary_inputs[i]] = static_cast<std::uint8_t>((boundary >> i) & 1u);
    std::vector<std::int8_t> member(c.gate_count(), 0);
    for (int g : cb.gates) member[g] = 1;
    for (int g : c.topological_order()) {
        if (!member[g]) continue;
        const gate& gt = c.gates()[g];
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < gt.inputs.size(); ++i)
            v |= std::uint64_t{values[gt.inputs[i]]} << i;
        values[gt.output] = c.kinds()[gt.kind].truth_table[v];
    }
    return values;
}

inline std::optional<std::int64_t> composite_transition(const circuit& c, const composite_block& cb,
                                                        const transition_pair& pair,
                                                        int arity_cap = default_arity_cap) {
    check_composite_arity(cb, arity_cap);
    const auto before = evaluate(c, pair.prev);
    const auto after = evaluate(c, pair.cur);
    const std::uint64_t v_prev = boundary_value(cb, before);
    const std::uint64_t v_cur = boundary_value(cb, after);
    if (v_prev == v_cur) return std::nullopt;
    return encode_transition(v_prev, v_cur, cb.arity());
}

struct load_model {
    double capacitance = 1e-14;     // farads
    double initial_voltage = 0.0;   // volts
};

// v[m] = v0 + (1/C) * trapezoid(i, 0 .. m*dt); exact for constant currents.
inline waveform voltage_from_current(const waveform& current, const load_model& load) {
    if (!(load.capacitance > 0.0)) throw error(errc::validation, "capacitance must be positive");
    waveform v = waveform::zeros(current.size(), current.dt);
    if (v.size() == 0) return v;
    v.samples[0] = load.initial_voltage;
    const double scale = 0.5 * current.dt / load.capacitance;
    for (std::size_t m = 1; m < current.size(); ++m)
        v.samples[m] = v.samples[m - 1] + scale * (current.samples[m - 1] + current.samples[m]);
    return v;
}

// --- recursive probe -------------------------------------------------------

struct probe_options {
    std::uint64_t partition_seed = 1;
    int restarts = 8;
    int arity_cap = default_arity_cap;
    std::optional<std::int64_t> leaf_transition;  // default: most frequent transition of the driver
};

struct probe_level {
    composite_block block;
    std::int64_t composite_index = -1;   // target transition in the block's alphabet
    std::int64_t alphabet = 0;
    recovered_response recovered;
    double activation_rate = 0.0;        // positives / M
    std::optional<double> snr_db;
    int cut_size = -1;                   // bisection of this block; -1 at the leaf
    std::vector<int> sibling_gates;      // side discarded by the descent
};

struct probe_result {
    std::string net_name;
    int net = -1;
    int driver_gate = -1;
    std::int64_t leaf_transition = -1;
    std::size_t trace_count = 0;
    std::vector<probe_level> levels;     // whole circuit first, single-gate leaf last
    bool complete = false;
    int failed_level = -1;               // set when the arity cap stopped the descent
    int failed_arity = 0;

    const recovered_response& leaf() const {
        if (!complete) throw error(errc::capacity, "probe did not reach the leaf");
        return levels.back().recovered;
    }
};

namespace detail {

struct trace_values {
    // Flattened M x net_count matrices of net values under prev and cur inputs.
    std::vector<std::uint8_t> prev, cur;
    std::size_t nets = 0;

    std::span<const std::uint8_t> prev_of(std::size_t i) const {
        return {prev.data() + i * nets, nets};
    }
    std::span<const std::uint8_t> cur_of(std::size_t i) const {
        return {cur.data() + i * nets, nets};
    }
};

inline trace_values evaluate_all(const circuit& c, const trace_set& ts) {
    trace_values tv;
    tv.nets = static_cast<std::size_t>(c.net_count());
    tv.prev.resize(ts.size() * tv.nets);
    tv.cur.resize(ts.size() * tv.nets);
    parallel_chunks(ts.size(), trace_chunk, [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto before = evaluate(c, ts.pairs[i].prev);
            const auto after = evaluate(c, ts.pairs[i].cur);
            std::copy(before.begin(), before.end(), tv.prev.begin() + i * tv.nets);
            std::copy(after.begin(), after.end(), tv.cur.begin() + i * tv.nets);
        }
    });
    return tv;
}

inline std::uint64_t boundary_from(const composite_block& cb, std::span<const std::uint8_t> values) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < cb.boundary_inputs.size(); ++i)
        v |= std::uint64_t{values[cb.boundary_inputs[i]]} << i;
    return v;
}

inline std::uint64_t gate_local_from(const circuit& c, int gate_id,
                                     std::span<const std::uint8_t> values) {
    const gate& g = c.gates()[gate_id];
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < g.inputs.size(); ++i)
        v |= std::uint64_t{values[g.inputs[i]]} << i;
    return v;
}

// Does boundary transition `index` of this block make `gate_id` undergo `q`?
inline bool implies_gate_transition(const circuit& c, const composite_block& cb, std::int64_t index,
                                    int gate_id, std::int64_t q) {
    const auto [bv_prev, bv_cur] = decode_transition(index, cb.arity());
    const auto before = evaluate_block(c, cb, bv_prev);
    const auto after = evaluate_block(c, cb, bv_cur);
    const std::uint64_t v_prev = gate_local_from(c, gate_id, before);
    const std::uint64_t v_cur = gate_local_from(c, gate_id, after);
    if (v_prev == v_cur) return false;
    return encode_transition(v_prev, v_cur, c.arity_of(gate_id)) == q;
}

// Aggregate response of the block's members under one of its boundary transitions.
inline waveform composite_template(const circuit& c, const composite_block& cb,
                                   const gate_template_set& templates, std::int64_t index) {
    const auto [bv_prev, bv_cur] = decode_transition(index, cb.arity());
    const auto before = evaluate_block(c, cb, bv_prev);
    const auto after = evaluate_block(c, cb, bv_cur);
    waveform sum = waveform::zeros(templates.length(), templates.dt());
    for (int g : cb.gates) {
        const std::uint64_t v_prev = gate_local_from(c, g, before);
        const std::uint64_t v_cur = gate_local_from(c, g, after);
        if (v_prev == v_cur) continue;
        add_scaled(sum, templates.at(g, encode_transition(v_prev, v_cur, c.arity_of(g))), 1.0);
    }
    return sum;
}

}  // namespace detail

inline probe_result probe_net(const circuit& c, const gate_template_set& templates,
                              const trace_set& raw_traces, std::string_view net_name,
                              const probe_options& opt = {}) {
    probe_result res;
    res.net_name = std::string(net_name);
    res.net = c.find_net(net_name);
    if (res.net < 0) throw error(errc::validation, "unknown net '" + res.net_name + "'");
    res.driver_gate = c.nets()[res.net].driver_gate;
    if (res.driver_gate < 0)
        throw error(errc::validation, "net '" + res.net_name + "' is a primary input; only gate-driven nets can be probed");
    templates.validate_against(c, opt.arity_cap);
    check_trace_set(raw_traces);
    res.trace_count = raw_traces.size();

    const trace_set traces =
        raw_traces.mean_removed ? raw_traces : subtract_ensemble_mean(raw_traces);
    const auto tv = detail::evaluate_all(c, traces);
    const std::size_t m = traces.size();

    // Leaf transition: requested, or the driver's most frequent observed one.
    std::vector<std::int64_t> driver_locals(m, -1);
    for (std::size_t i = 0; i < m; ++i) {
        const std::uint64_t v_prev = detail::gate_local_from(c, res.driver_gate, tv.prev_of(i));
        const std::uint64_t v_cur = detail::gate_local_from(c, res.driver_gate, tv.cur_of(i));
        if (v_prev != v_cur)
            driver_locals[i] = encode_transition(v_prev, v_cur, c.arity_of(res.driver_gate));
    }
    if (opt.leaf_transition) {
        check_target(c, {res.driver_gate, *opt.leaf_transition}, opt.arity_cap);
        res.leaf_transition = *opt.leaf_transition;
    } else {
        std::map<std::int64_t, std::size_t> freq;
        for (auto j : driver_locals)
            if (j >= 0) ++freq[j];
        if (freq.empty())
            throw error(errc::validation, "driver of net '" + res.net_name +
                                              "' never transitions in the trace set");
        res.leaf_transition = std::max_element(freq.begin(), freq.end(), [](auto& a, auto& b) {
                                  return a.second < b.second ||
                                         (a.second == b.second && a.first > b.first);
                              })->first;
    }

    // Empirical mean contribution per gate, for the per-level ground truth.
    std::vector<waveform> gate_mean(c.gate_count(),
                                    waveform::zeros(templates.length(), templates.dt()));
    for (std::size_t i = 0; i < m; ++i) {
        for (int g = 0; g < c.gate_count(); ++g) {
            const std::uint64_t v_prev = detail::gate_local_from(c, g, tv.prev_of(i));
            const std::uint64_t v_cur = detail::gate_local_from(c, g, tv.cur_of(i));
            if (v_prev == v_cur) continue;
            add_scaled(gate_mean[g], templates.at(g, encode_transition(v_prev, v_cur, c.arity_of(g))),
                       1.0);
        }
    }
    for (auto& w : gate_mean)
        for (double& s : w.samples) s /= static_cast<double>(m);

    std::vector<int> block(c.gate_count());
    for (int g = 0; g < c.gate_count(); ++g) block[g] = g;

    for (int level = 0;; ++level) {
        composite_block cb = make_composite_block(c, block);
        if (cb.arity() > opt.arity_cap) {
            res.failed_level = level;
            res.failed_arity = cb.arity();
            return res;
        }
        const std::int64_t alphabet = transition_alphabet_size(cb.arity(), opt.arity_cap);

        std::vector<std::int64_t> composite(m, -1);
        std::map<std::int64_t, std::size_t> freq;
        for (std::size_t i = 0; i < m; ++i) {
            const std::uint64_t v_prev = detail::boundary_from(cb, tv.prev_of(i));
            const std::uint64_t v_cur = detail::boundary_from(cb, tv.cur_of(i));
            if (v_prev == v_cur) continue;
            composite[i] = encode_transition(v_prev, v_cur, cb.arity());
            ++freq[composite[i]];
        }

        // The level's target: most frequent boundary transition that makes the
        // driver undergo the leaf transition.
        std::int64_t target = -1;
        std::size_t target_count = 0;
        for (const auto& [index, count] : freq) {
            if (!detail::implies_gate_transition(c, cb, index, res.driver_gate, res.leaf_transition))
                continue;
            if (count > target_count) {
                target = index;
                target_count = count;
            }
        }
        if (target < 0)
            throw error(errc::validation, "transition " + std::to_string(res.leaf_transition) +
                                              " of gate " + std::to_string(res.driver_gate) +
                                              " is never exercised by the trace set (level " +
                                              std::to_string(level) + ")");

        activation_sequence seq;
        seq.target = {res.driver_gate, res.leaf_transition};
        seq.signs.resize(m);
        for (std::size_t i = 0; i < m; ++i)
            seq.signs[i] = static_cast<std::int8_t>(composite[i] == target ? 1 : -1);

        probe_level pl;
        pl.block = cb;
        pl.composite_index = target;
        pl.alphabet = alphabet;
        pl.recovered = estimate_response(traces, seq);
        pl.activation_rate =
            static_cast<double>(pl.recovered.positives) / static_cast<double>(m);

        // Ground truth for this level: the block's response under the target
        // boundary transition, mean-removed, scaled by the estimator gain
        // 4*positives/M (unity for a balanced single-bit boundary).
        waveform truth = detail::composite_template(c, cb, templates, target);
        for (int g : cb.gates) add_scaled(truth, gate_mean[g], -1.0);
        const double gain = 4.0 * pl.activation_rate;
        truth = scaled(std::move(truth), gain);
        if (energy(truth) > 0.0) {
            pl.snr_db = snr_report(pl.recovered.estimate, truth);
            pl.recovered.snr_db = pl.snr_db;
        }

        if (block.size() == 1) {
            res.levels.push_back(std::move(pl));
            res.complete = true;
            return res;
        }

        partition part = min_cut_bisect(c, block, opt.partition_seed, opt.restarts);
        const bool in_a =
            std::find(part.side_a.begin(), part.side_a.end(), res.driver_gate) != part.side_a.end();
        pl.cut_size = part.cut_size();
        pl.sibling_gates = in_a ? part.side_b : part.side_a;
        res.levels.push_back(std::move(pl));
        block = in_a ? part.side_a : part.side_b;
    }
}

// --- reports ---------------------------------------------------------------

inline std::string probe_report_json(const probe_result& r, const circuit& c) {
    auto gate_names = [&](const std::vector<int>& ids) {
        auto arr = nlohmann::ordered_json::array();
        for (int g : ids) arr.push_back(c.gates()[g].name);
        return arr;
    };

    // Innermost (leaf) node outward, nesting each level's target child.
    nlohmann::ordered_json child;
    for (std::size_t i = r.levels.size(); i > 0; --i) {
        const auto& lvl = r.levels[i - 1];
        nlohmann::ordered_json node;
        node["gates"] = gate_names(lvl.block.gates);
        auto nets = nlohmann::ordered_json::array();
        for (int n : lvl.block.boundary_inputs) nets.push_back(c.nets()[n].name);
        node["boundary_nets"] = std::move(nets);
        node["arity"] = lvl.block.arity();
        node["alphabet"] = lvl.alphabet;
        node["composite_transition"] = lvl.composite_index;
        node["positives"] = lvl.recovered.positives;
        node["activation_rate"] = lvl.activation_rate;
        if (lvl.snr_db)
            node["snr_db"] = *lvl.snr_db;
        else
            node["snr_db"] = nullptr;
        if (lvl.cut_size >= 0) {
            node["cut_size"] = lvl.cut_size;
            node["sibling"] = nlohmann::ordered_json{{"gates", gate_names(lvl.sibling_gates)}};
            node["child"] = std::move(child);
        }
        child = std::move(node);
    }

    nlohmann::ordered_json doc;
    doc["net"] = r.net_name;
    doc["driver_gate"] = r.driver_gate >= 0 ? c.gates()[r.driver_gate].name : "";
    doc["leaf_transition"] = r.leaf_transition;
    doc["traces"] = r.trace_count;
    doc["complete"] = r.complete;
    if (!r.levels.empty()) doc["root"] = std::move(child);
    if (r.failed_level >= 0) {
        doc["failed_level"] = r.failed_level;
        doc["failed_arity"] = r.failed_arity;
    }
    return doc.dump(2) + "\n";
}

// Same shape as the recovered-response CSV, volts in place of amperes.
inline std::string voltage_to_csv(const recovered_response& src, const waveform& volts) {
    std::string out = "SCO-VOLTAGE,v1," + std::to_string(src.target.gate) + "," +
                      std::to_string(src.target.transition) + "," + std::to_string(src.trace_count) +
                      "," + std::to_string(src.positives) + "," + format_double(volts.dt) + "\n";
    for (std::size_t s = 0; s < volts.size(); ++s) {
        out += format_double(static_cast<double>(s) * volts.dt);
        out += ',';
        out += format_double(volts.samples[s]);
        out += '\n';
    }
    return out;
}

}  // namespace sco
