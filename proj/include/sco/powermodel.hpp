#pragma once

// Gate step-response template libraries and aggregate trace synthesis.
//
// A trace for one primary-input transition is the superposition of the step
// current responses of exactly those gates whose local input vector changed,
// plus optional white Gaussian noise. Identity transitions draw no current.
//
// File formats (UTF-8 CSV):
//   traces:    SCO-TRACES,v1,<M>,<length>,<dt_seconds>
//              <prev_hex>,<cur_hex>,<s0>,<s1>,...          one line per trace
//   templates: SCO-TMPL,v1,<dt>,<length>
//              <gate_id>,<j>,<s0>,...                      one line per transition

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sco/logicsim.hpp"
#include "sco/netlist.hpp"
#include "sco/parallel.hpp"
#include "sco/rng.hpp"
#include "sco/waveform.hpp"

namespace sco {

namespace detail {
inline constexpr std::uint64_t stream_pairs = 1;
inline constexpr std::uint64_t stream_noise = 2;
inline constexpr std::uint64_t stream_templates = 3;
inline constexpr std::size_t trace_chunk = 256;
}  // namespace detail

struct template_shape {
    double peak = 1e-3;        // amperes
    double tau_fall = 2e-9;    // slow (decay) time constant, seconds
    double tau_rise = 0.5e-9;  // fast time constant, seconds
};

// Difference of exponentials with sample 0 exactly zero; a crude but
// closed-form stand-in for a CMOS switching current pulse.
inline waveform make_template(const template_shape& shape, double dt, std::size_t length) {
    if (!(shape.tau_rise > 0.0) || !(shape.tau_fall > 0.0))
        throw error(errc::validation, "time constants must be positive");
    if (!(shape.tau_fall > shape.tau_rise))
        throw error(errc::validation, "tau_fall must exceed tau_rise");
    if (!(dt > 0.0)) throw error(errc::validation, "dt must be positive");
    if (length < 1) throw error(errc::validation, "length must be >= 1");
    waveform w = waveform::zeros(length, dt);
    for (std::size_t m = 0; m < length; ++m) {
        const double t = static_cast<double>(m) * dt;
        w.samples[m] = shape.peak * (std::exp(-t / shape.tau_fall) - std::exp(-t / shape.tau_rise));
    }
    return w;
}

class gate_template_set {
  public:
    gate_template_set() = default;

    static gate_template_set from_parts(std::vector<std::vector<waveform>> per_gate, double dt,
                                        std::size_t length) {
        gate_template_set t;
        t.per_gate_ = std::move(per_gate);
        t.dt_ = dt;
        t.length_ = length;
        for (const auto& gate_templates : t.per_gate_)
            for (const auto& w : gate_templates)
                if (w.dt != dt || w.size() != length)
                    throw error(errc::grid_mismatch, "template does not share the common (dt, length)");
        return t;
    }

    // One jittered pulse per (gate, transition); deterministic in the seed.
    static gate_template_set synthesize(const circuit& c, const template_shape& base, double dt,
                                        std::size_t length, std::uint64_t seed,
                                        int arity_cap = default_arity_cap) {
        std::vector<std::vector<waveform>> per_gate(c.gate_count());
        for (int k = 0; k < c.gate_count(); ++k) {
            const std::int64_t alphabet = transition_alphabet_size(c, k, arity_cap);
            per_gate[k].reserve(alphabet);
            for (std::int64_t j = 0; j < alphabet; ++j) {
                splitmix64 rng(mix_seed(seed, detail::stream_templates,
                                        (static_cast<std::uint64_t>(k) << 32) ^
                                            static_cast<std::uint64_t>(j)));
                template_shape s;
                s.peak = base.peak * (0.6 + 0.8 * rng.next_unit());
                s.tau_fall = base.tau_fall * (0.85 + 0.3 * rng.next_unit());
                s.tau_rise = base.tau_rise * (0.85 + 0.3 * rng.next_unit());
                if (s.tau_rise >= 0.9 * s.tau_fall) s.tau_rise = 0.45 * s.tau_fall;
                per_gate[k].push_back(make_template(s, dt, length));
            }
        }
        return from_parts(std::move(per_gate), dt, length);
    }

    double dt() const { return dt_; }
    std::size_t length() const { return length_; }
    int gate_count() const { return static_cast<int>(per_gate_.size()); }

    const waveform& at(int gate_id, std::int64_t transition) const {
        if (gate_id < 0 || gate_id >= gate_count())
            throw error(errc::validation, "no templates for gate " + std::to_string(gate_id));
        const auto& g = per_gate_[gate_id];
        if (transition < 0 || transition >= static_cast<std::int64_t>(g.size()))
            throw error(errc::validation, "gate " + std::to_string(gate_id) + " has no template for transition " +
                                              std::to_string(transition));
        return g[transition];
    }

    std::int64_t alphabet_of(int gate_id) const {
        return static_cast<std::int64_t>(per_gate_[gate_id].size());
    }

    void validate_against(const circuit& c, int arity_cap = default_arity_cap) const {
        if (gate_count() != c.gate_count())
            throw error(errc::validation, "template set covers " + std::to_string(gate_count()) +
                                              " gates, circuit has " + std::to_string(c.gate_count()));
        for (int k = 0; k < c.gate_count(); ++k) {
            const std::int64_t want = transition_alphabet_size(c, k, arity_cap);
            if (alphabet_of(k) != want)
                throw error(errc::validation, "gate " + std::to_string(k) + " ('" + c.gates()[k].name +
                                                  "') needs " + std::to_string(want) + " templates, has " +
                                                  std::to_string(alphabet_of(k)));
        }
    }

    // In-place rescale of all of one gate's responses; models a heavier output load.
    void scale_gate(int gate_id, double factor) {
        if (gate_id < 0 || gate_id >= gate_count())
            throw error(errc::validation, "no templates for gate " + std::to_string(gate_id));
        for (auto& w : per_gate_[gate_id])
            for (double& s : w.samples) s *= factor;
    }

  private:
    std::vector<std::vector<waveform>> per_gate_;
    double dt_ = 0.0;
    std::size_t length_ = 0;
};

struct noise_spec {
    double sigma = 0.0;  // std-dev of per-sample additive white Gaussian noise, amperes
    std::uint64_t seed = 0;
};

struct trace_set {
    std::vector<waveform> traces;
    std::vector<transition_pair> pairs;  // aligned with traces
    bool mean_removed = false;

    std::size_t size() const { return traces.size(); }
    std::size_t length() const { return traces.empty() ? 0 : traces.front().size(); }
    double dt() const { return traces.empty() ? 0.0 : traces.front().dt; }
};

inline void check_trace_set(const trace_set& ts) {
    if (ts.size() < 1) throw error(errc::validation, "trace set must hold at least one trace");
    if (ts.pairs.size() != ts.traces.size())
        throw error(errc::validation, "trace/pair count mismatch");
    for (const auto& w : ts.traces) check_same_grid(ts.traces.front(), w);
}

// Pairs loaded from disk carry the hex-padded width; bind them to the circuit.
inline void conform_pairs(trace_set& ts, const circuit& c) {
    for (auto& p : ts.pairs) {
        p.prev = p.prev.conformed(c.width());
        p.cur = p.cur.conformed(c.width());
    }
}

// The noise_stream_index decouples a trace's noise from scheduling, so a set
// synthesized in parallel is identical to one synthesized serially.
inline waveform synthesize_trace(const circuit& c, const gate_template_set& templates,
                                 const transition_pair& pair, const noise_spec& noise,
                                 std::uint64_t noise_stream_index = 0) {
    templates.validate_against(c);
    if (noise.sigma < 0.0) throw error(errc::validation, "noise sigma must be >= 0");
    waveform out = waveform::zeros(templates.length(), templates.dt());

    const auto before = evaluate(c, pair.prev);
    const auto after = evaluate(c, pair.cur);
    for (int k = 0; k < c.gate_count(); ++k) {
        const std::uint64_t v_prev = local_value(c, before, k);
        const std::uint64_t v_cur = local_value(c, after, k);
        if (v_prev == v_cur) continue;
        add_scaled(out, templates.at(k, encode_transition(v_prev, v_cur, c.arity_of(k))), 1.0);
    }
    if (noise.sigma > 0.0) {
        gaussian_stream g(mix_seed(noise.seed, detail::stream_noise, noise_stream_index));
        for (double& s : out.samples) s += noise.sigma * g.next();
    }
    return out;
}

struct prng_pair_source {
    std::uint64_t seed = 0;
    std::size_t count = 0;
};

using pair_source = std::variant<std::vector<transition_pair>, prng_pair_source>;

inline transition_pair uniform_pair(const circuit& c, std::uint64_t seed, std::uint64_t index) {
    splitmix64 rng(mix_seed(seed, detail::stream_pairs, index));
    transition_pair p;
    p.prev.bits.resize(c.width());
    p.cur.bits.resize(c.width());
    for (int b = 0; b < c.width(); ++b) p.prev.bits[b] = static_cast<std::uint8_t>(rng.next() & 1);
    for (int b = 0; b < c.width(); ++b) p.cur.bits[b] = static_cast<std::uint8_t>(rng.next() & 1);
    return p;
}

inline trace_set generate_trace_set(const circuit& c, const gate_template_set& templates,
                                    const pair_source& source, const noise_spec& noise) {
    templates.validate_against(c);
    if (noise.sigma < 0.0) throw error(errc::validation, "noise sigma must be >= 0");

    trace_set ts;
    if (const auto* list = std::get_if<std::vector<transition_pair>>(&source)) {
        if (list->empty()) throw error(errc::validation, "pair list must hold at least one pair");
        for (const auto& p : *list)
            if (p.prev.width() != c.width() || p.cur.width() != c.width())
                throw error(errc::width_mismatch, "pair width does not match circuit width");
        ts.pairs = *list;
    } else {
        const auto& prng = std::get<prng_pair_source>(source);
        if (prng.count < 1) throw error(errc::validation, "M must be >= 1");
        ts.pairs.resize(prng.count);
        for (std::size_t i = 0; i < prng.count; ++i) ts.pairs[i] = uniform_pair(c, prng.seed, i);
    }

    const std::size_t m = ts.pairs.size();
    ts.traces.resize(m);
    parallel_chunks(m, detail::trace_chunk, [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t i = begin; i < end; ++i)
            ts.traces[i] = synthesize_trace(c, templates, ts.pairs[i], noise, i);
    });
    return ts;
}

inline waveform ensemble_mean(const trace_set& ts) {
    check_trace_set(ts);
    waveform mean = waveform::zeros(ts.length(), ts.dt());
    for (const auto& t : ts.traces)
        for (std::size_t s = 0; s < mean.size(); ++s) mean.samples[s] += t.samples[s];
    const double inv = 1.0 / static_cast<double>(ts.size());
    for (double& s : mean.samples) s *= inv;
    return mean;
}

inline trace_set subtract_ensemble_mean(trace_set ts) {
    check_trace_set(ts);
    if (ts.mean_removed)
        throw error(errc::validation, "ensemble mean already removed from this trace set");
    const waveform mean = ensemble_mean(ts);
    for (auto& t : ts.traces)
        for (std::size_t s = 0; s < t.size(); ++s) t.samples[s] -= mean.samples[s];
    ts.mean_removed = true;
    return ts;
}

// --- file formats ---------------------------------------------------------

inline std::string trace_set_to_csv(const trace_set& ts) {
    check_trace_set(ts);
    std::string out = "SCO-TRACES,v1," + std::to_string(ts.size()) + "," +
                      std::to_string(ts.length()) + "," + format_double(ts.dt()) + "\n";
    for (std::size_t i = 0; i < ts.size(); ++i) {
        out += ts.pairs[i].prev.to_hex();
        out += ',';
        out += ts.pairs[i].cur.to_hex();
        for (double s : ts.traces[i].samples) {
            out += ',';
            out += format_double(s);
        }
        out += '\n';
    }
    return out;
}

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

template <typename LineFn>
inline void for_each_line(std::string_view text, LineFn&& fn) {
    std::size_t pos = 0;
    int line_no = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        if (!line.empty()) fn(line, line_no);
        pos = eol == std::string_view::npos ? text.size() : eol + 1;
    }
}

}  // namespace detail

inline trace_set trace_set_from_csv(std::string_view text) {
    trace_set ts;
    std::size_t expect_m = 0, expect_len = 0;
    double dt = 0.0;
    bool have_header = false;
    detail::for_each_line(text, [&](std::string_view line, int line_no) {
        auto fields = detail::split_csv(line);
        if (!have_header) {
            if (fields.size() != 5 || fields[0] != "SCO-TRACES" || fields[1] != "v1")
                throw error(errc::syntax, "line 1: expected 'SCO-TRACES,v1,<M>,<length>,<dt>' header");
            expect_m = static_cast<std::size_t>(parse_int(fields[2]));
            expect_len = static_cast<std::size_t>(parse_int(fields[3]));
            dt = parse_double(fields[4]);
            have_header = true;
            return;
        }
        if (fields.size() != expect_len + 2)
            throw error(errc::syntax, "line " + std::to_string(line_no) + ": expected " +
                                          std::to_string(expect_len + 2) + " fields, got " +
                                          std::to_string(fields.size()));
        transition_pair p;
        p.prev = input_vector::from_hex(fields[0]);
        p.cur = input_vector::from_hex(fields[1]);
        waveform w = waveform::zeros(expect_len, dt);
        for (std::size_t s = 0; s < expect_len; ++s) w.samples[s] = parse_double(fields[s + 2]);
        ts.pairs.push_back(std::move(p));
        ts.traces.push_back(std::move(w));
    });
    if (!have_header) throw error(errc::syntax, "empty trace file");
    if (ts.size() != expect_m)
        throw error(errc::syntax, "trace file announces M=" + std::to_string(expect_m) + " but holds " +
                                      std::to_string(ts.size()) + " traces");
    check_trace_set(ts);
    return ts;
}

inline std::string template_set_to_csv(const gate_template_set& t) {
    std::string out = "SCO-TMPL,v1," + format_double(t.dt()) + "," + std::to_string(t.length()) + "\n";
    for (int k = 0; k < t.gate_count(); ++k) {
        for (std::int64_t j = 0; j < t.alphabet_of(k); ++j) {
            out += std::to_string(k);
            out += ',';
            out += std::to_string(j);
            for (double s : t.at(k, j).samples) {
                out += ',';
                out += format_double(s);
            }
            out += '\n';
        }
    }
    return out;
}

inline gate_template_set template_set_from_csv(std::string_view text) {
    double dt = 0.0;
    std::size_t length = 0;
    bool have_header = false;
    std::vector<std::vector<std::optional<waveform>>> rows;
    detail::for_each_line(text, [&](std::string_view line, int line_no) {
        auto fields = detail::split_csv(line);
        if (!have_header) {
            if (fields.size() != 4 || fields[0] != "SCO-TMPL" || fields[1] != "v1")
                throw error(errc::syntax, "line 1: expected 'SCO-TMPL,v1,<dt>,<length>' header");
            dt = parse_double(fields[2]);
            length = static_cast<std::size_t>(parse_int(fields[3]));
            have_header = true;
            return;
        }
        if (fields.size() != length + 2)
            throw error(errc::syntax, "line " + std::to_string(line_no) + ": expected " +
                                          std::to_string(length + 2) + " fields, got " +
                                          std::to_string(fields.size()));
        const auto gate_id = parse_int(fields[0]);
        const auto j = parse_int(fields[1]);
        if (gate_id < 0 || j < 0)
            throw error(errc::syntax, "line " + std::to_string(line_no) + ": negative gate or transition id");
        if (rows.size() <= static_cast<std::size_t>(gate_id)) rows.resize(gate_id + 1);
        auto& gate_rows = rows[gate_id];
        if (gate_rows.size() <= static_cast<std::size_t>(j)) gate_rows.resize(j + 1);
        if (gate_rows[j])
            throw error(errc::syntax, "line " + std::to_string(line_no) + ": duplicate template for gate " +
                                          std::to_string(gate_id) + " transition " + std::to_string(j));
        waveform w = waveform::zeros(length, dt);
        for (std::size_t s = 0; s < length; ++s) w.samples[s] = parse_double(fields[s + 2]);
        gate_rows[j] = std::move(w);
    });
    if (!have_header) throw error(errc::syntax, "empty template file");

    std::vector<std::vector<waveform>> per_gate(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        for (std::size_t j = 0; j < rows[k].size(); ++j) {
            if (!rows[k][j])
                throw error(errc::validation, "template file is missing gate " + std::to_string(k) +
                                                  " transition " + std::to_string(j));
            per_gate[k].push_back(std::move(*rows[k][j]));
        }
        if (per_gate[k].empty())
            throw error(errc::validation, "template file has no rows for gate " + std::to_string(k));
    }
    return gate_template_set::from_parts(std::move(per_gate), dt, length);
}

}  // namespace sco
