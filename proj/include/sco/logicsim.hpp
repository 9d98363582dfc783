#pragma once

// Zero-delay evaluation of net values plus the signed activation algebra.
// A gate's behaviour under a primary-input transition is the pair of its
// steady-state local input vectors; hazards between the two states are not
// modelled, so each gate sees at most one transition per input pair.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sco/netlist.hpp"

namespace sco {

struct input_vector {
    std::vector<std::uint8_t> bits;  // bit i = i-th declared primary input

    int width() const { return static_cast<int>(bits.size()); }

    static input_vector from_value(std::uint64_t value, int width) {
        input_vector v;
        v.bits.resize(width);
        for (int i = 0; i < width; ++i) v.bits[i] = static_cast<std::uint8_t>((value >> i) & 1u);
        return v;
    }

    std::uint64_t value() const {
        std::uint64_t v = 0;
        for (int i = 0; i < width() && i < 64; ++i) v |= std::uint64_t{bits[i]} << i;
        return v;
    }

    // Fixed-width lowercase hex, bit 0 = least significant bit of the value.
    std::string to_hex() const {
        const int digits = width() == 0 ? 1 : (width() + 3) / 4;
        std::string out(digits, '0');
        for (int d = 0; d < digits; ++d) {
            int nibble = 0;
            for (int b = 0; b < 4; ++b) {
                int bit = d * 4 + b;
                if (bit < width() && bits[bit]) nibble |= 1 << b;
            }
            out[digits - 1 - d] = "0123456789abcdef"[nibble];
        }
        return out;
    }

    static input_vector from_hex(std::string_view hex) {
        input_vector v;
        v.bits.resize(hex.size() * 4);
        for (std::size_t d = 0; d < hex.size(); ++d) {
            char c = hex[hex.size() - 1 - d];
            int nibble;
            if (c >= '0' && c <= '9') nibble = c - '0';
            else if (c >= 'a' && c <= 'f') nibble = c - 'a' + 10;
            else if (c >= 'A' && c <= 'F') nibble = c - 'A' + 10;
            else throw error(errc::syntax, std::string("bad hex digit '") + c + "'");
            for (int b = 0; b < 4; ++b) v.bits[d * 4 + b] = static_cast<std::uint8_t>((nibble >> b) & 1);
        }
        return v;
    }

    // Shrinks a hex-decoded vector to the circuit width; excess high bits must be zero.
    input_vector conformed(int width) const {
        if (this->width() < width)
            throw error(errc::width_mismatch, "input vector has " + std::to_string(this->width()) +
                                                  " bits, circuit expects " + std::to_string(width));
        for (int i = width; i < this->width(); ++i)
            if (bits[i])
                throw error(errc::width_mismatch,
                            "input vector sets bit " + std::to_string(i) + " beyond circuit width " +
                                std::to_string(width));
        input_vector v;
        v.bits.assign(bits.begin(), bits.begin() + width);
        return v;
    }

    bool operator==(const input_vector&) const = default;
};

struct transition_pair {
    input_vector prev;  // applied before t=0
    input_vector cur;   // applied at t=0

    bool operator==(const transition_pair&) const = default;
};

struct local_transition {
    int gate = -1;
    std::int64_t index = -1;  // position in the gate's transition alphabet
};

enum class activation_sign : std::int8_t {
    minus = -1,  // in-range transition that did not occur (unchanged or a different one)
    zero = 0,    // transition index out of range
    plus = 1,    // exactly this transition occurred
};

inline int value_of(activation_sign s) { return static_cast<int>(s); }

// A = (1 + T) / 2. For T = 0 this yields 1/2 by arithmetic; occurrence sums must
// drop the out-of-range case instead of counting it as half an event.
inline double activation_indicator(activation_sign s) { return 0.5 * (1.0 + value_of(s)); }

// Ordered distinct pairs (v_prev, v_cur) of n-bit vectors <-> [0, 2^n*(2^n-1)).
inline std::int64_t encode_transition(std::uint64_t v_prev, std::uint64_t v_cur, int arity) {
    const std::int64_t side = (std::int64_t{1} << arity) - 1;
    return static_cast<std::int64_t>(v_prev) * side +
           static_cast<std::int64_t>(v_cur < v_prev ? v_cur : v_cur - 1);
}

inline std::pair<std::uint64_t, std::uint64_t> decode_transition(std::int64_t index, int arity) {
    const std::int64_t side = (std::int64_t{1} << arity) - 1;
    const std::uint64_t v_prev = static_cast<std::uint64_t>(index / side);
    const std::uint64_t r = static_cast<std::uint64_t>(index % side);
    return {v_prev, r < v_prev ? r : r + 1};
}

inline std::vector<std::uint8_t> evaluate(const circuit& c, const input_vector& in) {
    if (in.width() != c.width())
        throw error(errc::width_mismatch, "input width " + std::to_string(in.width()) +
                                              " does not match circuit width " +
                                              std::to_string(c.width()));
    std::vector<std::uint8_t> values(c.net_count(), 0);
    for (int i = 0; i < c.width(); ++i) values[c.primary_inputs()[i]] = in.bits[i];
    for (int g : c.topological_order()) {
        const gate& gt = c.gates()[g];
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < gt.inputs.size(); ++i)
            v |= std::uint64_t{values[gt.inputs[i]]} << i;
        values[gt.output] = c.kinds()[gt.kind].truth_table[v];
    }
    return values;
}

inline std::uint64_t local_value(const circuit& c, const std::vector<std::uint8_t>& net_values,
                                 int gate_id) {
    const gate& g = c.gates()[gate_id];
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < g.inputs.size(); ++i)
        v |= std::uint64_t{net_values[g.inputs[i]]} << i;
    return v;
}

inline void check_gate_id(const circuit& c, int gate_id) {
    if (gate_id < 0 || gate_id >= c.gate_count())
        throw error(errc::validation, "unknown gate id " + std::to_string(gate_id));
}

inline std::optional<local_transition> local_transition_of(const circuit& c,
                                                           const transition_pair& pair, int gate_id) {
    check_gate_id(c, gate_id);
    const auto before = evaluate(c, pair.prev);
    const auto after = evaluate(c, pair.cur);
    const std::uint64_t v_prev = local_value(c, before, gate_id);
    const std::uint64_t v_cur = local_value(c, after, gate_id);
    if (v_prev == v_cur) return std::nullopt;
    return local_transition{gate_id, encode_transition(v_prev, v_cur, c.arity_of(gate_id))};
}

inline activation_sign activation_sign_of(const circuit& c, const transition_pair& pair, int gate_id,
                                          std::int64_t transition) {
    check_gate_id(c, gate_id);
    if (transition < 0 || transition >= transition_alphabet_size(c, gate_id))
        return activation_sign::zero;
    const auto lt = local_transition_of(c, pair, gate_id);
    return (lt && lt->index == transition) ? activation_sign::plus : activation_sign::minus;
}

}  // namespace sco
