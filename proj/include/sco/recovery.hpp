#pragma once

// Signed-activation correlation estimator.
//
// With the per-sample ensemble mean removed from the M traces, weighting each
// trace by the +/-1 activation of a target (gate, transition) and summing gives
// s_acc(t); the step response estimate is (2/M) * s_acc(t). What it converges
// to is the mean-removed response: the absolute DC level is gone once means
// are subtracted, and any activity correlated with the target survives as
// residual noise. snr_report quantifies that residual against a supplied
// ground truth.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sco/logicsim.hpp"
#include "sco/netlist.hpp"
#include "sco/parallel.hpp"
#include "sco/powermodel.hpp"
#include "sco/waveform.hpp"

namespace sco {

inline constexpr double snr_cap_db = 300.0;

struct target_transition {
    int gate = -1;
    std::int64_t transition = -1;
};

struct activation_sequence {
    target_transition target;
    std::vector<std::int8_t> signs;  // one of {-1, +1} per trace; zeros are rejected upstream

    std::size_t size() const { return signs.size(); }

    std::int64_t positives() const {
        std::int64_t n = 0;
        for (auto s : signs) n += (s > 0);
        return n;
    }
};

inline void check_target(const circuit& c, const target_transition& t,
                         int arity_cap = default_arity_cap) {
    check_gate_id(c, t.gate);
    const std::int64_t alphabet = transition_alphabet_size(c, t.gate, arity_cap);
    if (t.transition < 0 || t.transition >= alphabet)
        throw error(errc::validation, "transition index " + std::to_string(t.transition) +
                                          " >= N_k=" + std::to_string(alphabet) + " for gate " +
                                          std::to_string(t.gate));
}

namespace detail {

// Per-pair local transition of one gate, without materializing full net values
// per call site. Used by both the sequence builder and the orthogonality probe.
inline std::vector<std::int64_t> local_transitions_of_gate(const circuit& c,
                                                           std::span<const transition_pair> pairs,
                                                           int gate_id) {
    std::vector<std::int64_t> out(pairs.size(), -1);
    parallel_chunks(pairs.size(), trace_chunk, [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto before = evaluate(c, pairs[i].prev);
            const auto after = evaluate(c, pairs[i].cur);
            const std::uint64_t v_prev = local_value(c, before, gate_id);
            const std::uint64_t v_cur = local_value(c, after, gate_id);
            if (v_prev != v_cur) out[i] = encode_transition(v_prev, v_cur, c.arity_of(gate_id));
        }
    });
    return out;
}

}  // namespace detail

inline activation_sequence compute_activation_sequence(const circuit& c, const trace_set& traces,
                                                       int gate_id, std::int64_t transition) {
    check_trace_set(traces);
    check_target(c, {gate_id, transition});
    activation_sequence seq;
    seq.target = {gate_id, transition};
    const auto locals = detail::local_transitions_of_gate(c, traces.pairs, gate_id);
    seq.signs.resize(locals.size());
    for (std::size_t i = 0; i < locals.size(); ++i)
        seq.signs[i] = static_cast<std::int8_t>(locals[i] == transition ? 1 : -1);
    return seq;
}

// s_acc(t): signs[i] * trace_i summed in trace-index order. Chunk partials are
// combined in chunk order, so the result is independent of the thread budget.
inline waveform accumulate(const trace_set& traces, const activation_sequence& signs) {
    check_trace_set(traces);
    if (!traces.mean_removed)
        throw error(errc::validation, "trace set must be ensemble-mean-removed before accumulation");
    if (signs.size() != traces.size())
        throw error(errc::validation, "sign sequence length " + std::to_string(signs.size()) +
                                          " does not match trace count " + std::to_string(traces.size()));

    const std::size_t n_chunks = (traces.size() + detail::trace_chunk - 1) / detail::trace_chunk;
    std::vector<waveform> partial(n_chunks, waveform::zeros(traces.length(), traces.dt()));
    parallel_chunks(traces.size(), detail::trace_chunk,
                    [&](std::size_t begin, std::size_t end, std::size_t chunk) {
                        waveform& acc = partial[chunk];
                        for (std::size_t i = begin; i < end; ++i) {
                            const double s = signs.signs[i];
                            const auto& t = traces.traces[i].samples;
                            for (std::size_t m = 0; m < t.size(); ++m) acc.samples[m] += s * t[m];
                        }
                    });
    waveform out = waveform::zeros(traces.length(), traces.dt());
    for (const auto& p : partial) add_scaled(out, p, 1.0);
    return out;
}

struct recovered_response {
    target_transition target;
    waveform estimate;
    std::size_t trace_count = 0;
    std::int64_t positives = 0;
    std::optional<double> snr_db;  // filled only when a ground truth is available
};

inline recovered_response estimate_response(const trace_set& traces,
                                            const activation_sequence& signs) {
    recovered_response r;
    r.target = signs.target;
    r.estimate = scaled(accumulate(traces, signs), 2.0 / static_cast<double>(traces.size()));
    r.trace_count = traces.size();
    r.positives = signs.positives();
    return r;
}

struct orthogonality_report {
    std::int64_t inner = 0;   // sum of T_a * T_b, an exact integer
    double normalized = 0.0;  // inner / M
};

inline orthogonality_report empirical_orthogonality(const circuit& c,
                                                    std::span<const transition_pair> pairs,
                                                    const target_transition& a,
                                                    const target_transition& b) {
    check_target(c, a);
    check_target(c, b);
    if (pairs.empty()) throw error(errc::validation, "pair list must hold at least one pair");
    const auto la = detail::local_transitions_of_gate(c, pairs, a.gate);
    const auto lb = detail::local_transitions_of_gate(c, pairs, b.gate);
    orthogonality_report rep;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const int ta = la[i] == a.transition ? 1 : -1;
        const int tb = lb[i] == b.transition ? 1 : -1;
        rep.inner += ta * tb;
    }
    rep.normalized = static_cast<double>(rep.inner) / static_cast<double>(pairs.size());
    return rep;
}

// Energy ratio of the ground truth to the recovery residual, capped so a
// numerically exact match reports a finite value.
inline double snr_report(const waveform& estimate, const waveform& truth) {
    check_same_grid(estimate, truth);
    const double truth_energy = energy(truth);
    if (truth_energy == 0.0) throw error(errc::validation, "ground truth has zero energy");
    const double residual = energy(estimate - truth);
    if (residual == 0.0) return snr_cap_db;
    return std::min(snr_cap_db, 10.0 * std::log10(truth_energy / residual));
}

// What the estimator converges to for an uncorrelated target: the target's
// template minus the per-trace expected contribution of its gate, estimated
// over the same pair list.
inline waveform mean_removed_truth(const circuit& c, const gate_template_set& templates,
                                   std::span<const transition_pair> pairs, int gate_id,
                                   std::int64_t transition) {
    check_target(c, {gate_id, transition});
    templates.validate_against(c);
    const auto locals = detail::local_transitions_of_gate(c, pairs, gate_id);
    waveform mean = waveform::zeros(templates.length(), templates.dt());
    for (auto j : locals)
        if (j >= 0) add_scaled(mean, templates.at(gate_id, j), 1.0);
    waveform truth = templates.at(gate_id, transition);
    add_scaled(truth, mean, -1.0 / static_cast<double>(pairs.size()));
    return truth;
}

// Reads back a recovered-response CSV (or the voltage CSV, which shares the
// shape); the snr column is not persisted.
inline recovered_response response_from_csv(std::string_view text) {
    recovered_response r;
    double dt = 0.0;
    bool have_header = false;
    detail::for_each_line(text, [&](std::string_view line, int line_no) {
        auto fields = detail::split_csv(line);
        if (!have_header) {
            if (fields.size() != 7 || (fields[0] != "SCO-RECOVERED" && fields[0] != "SCO-VOLTAGE") ||
                fields[1] != "v1")
                throw error(errc::syntax,
                            "line 1: expected 'SCO-RECOVERED,v1,<gate>,<j>,<M>,<positives>,<dt>'");
            r.target.gate = static_cast<int>(parse_int(fields[2]));
            r.target.transition = parse_int(fields[3]);
            r.trace_count = static_cast<std::size_t>(parse_int(fields[4]));
            r.positives = parse_int(fields[5]);
            dt = parse_double(fields[6]);
            r.estimate.dt = dt;
            have_header = true;
            return;
        }
        if (fields.size() != 2)
            throw error(errc::syntax, "line " + std::to_string(line_no) + ": expected '<t>,<value>'");
        r.estimate.samples.push_back(parse_double(fields[1]));
    });
    if (!have_header) throw error(errc::syntax, "empty response file");
    return r;
}

// Recovered-response CSV: directly plottable (t, amps) rows.
inline std::string recovered_to_csv(const recovered_response& r) {
    std::string out = "SCO-RECOVERED,v1," + std::to_string(r.target.gate) + "," +
                      std::to_string(r.target.transition) + "," + std::to_string(r.trace_count) + "," +
                      std::to_string(r.positives) + "," + format_double(r.estimate.dt) + "\n";
    for (std::size_t m = 0; m < r.estimate.size(); ++m) {
        out += format_double(static_cast<double>(m) * r.estimate.dt);
        out += ',';
        out += format_double(r.estimate.samples[m]);
        out += '\n';
    }
    return out;
}

}  // namespace sco
