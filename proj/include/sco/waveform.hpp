#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "sco/netlist.hpp"

namespace sco {

// Uniformly sampled real signal on [0, T]; sample m sits at t = m*dt with the
// transition applied at t = 0. Current in amperes or voltage in volts.
struct waveform {
    std::vector<double> samples;
    double dt = 0.0;

    std::size_t size() const { return samples.size(); }
    double operator[](std::size_t i) const { return samples[i]; }
    double& operator[](std::size_t i) { return samples[i]; }

    static waveform zeros(std::size_t length, double dt) {
        waveform w;
        w.samples.assign(length, 0.0);
        w.dt = dt;
        return w;
    }

    bool same_grid(const waveform& other) const {
        return dt == other.dt && samples.size() == other.samples.size();
    }
};

inline void check_same_grid(const waveform& a, const waveform& b) {
    if (!a.same_grid(b))
        throw error(errc::grid_mismatch, "waveform grids differ: (" + std::to_string(a.size()) + ", dt=" +
                                             std::to_string(a.dt) + ") vs (" + std::to_string(b.size()) +
                                             ", dt=" + std::to_string(b.dt) + ")");
}

inline void add_scaled(waveform& acc, const waveform& w, double scale) {
    check_same_grid(acc, w);
    for (std::size_t i = 0; i < acc.size(); ++i) acc.samples[i] += scale * w.samples[i];
}

inline waveform scaled(waveform w, double s) {
    for (double& x : w.samples) x *= s;
    return w;
}

inline waveform operator+(waveform a, const waveform& b) {
    add_scaled(a, b, 1.0);
    return a;
}

inline waveform operator-(waveform a, const waveform& b) {
    add_scaled(a, b, -1.0);
    return a;
}

inline double energy(const waveform& w) {
    double e = 0.0;
    for (double x : w.samples) e += x * x;
    return e;
}

inline double l2_norm(const waveform& w) { return std::sqrt(energy(w)); }

inline double relative_l2_error(const waveform& estimate, const waveform& reference) {
    check_same_grid(estimate, reference);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < estimate.size(); ++i) {
        const double d = estimate.samples[i] - reference.samples[i];
        num += d * d;
        den += reference.samples[i] * reference.samples[i];
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(num / den);
}

// Shortest round-trip decimal form; keeps emitted files byte-stable and exact.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw error(errc::syntax, "bad number '" + std::string(s) + "'");
    return v;
}

inline std::int64_t parse_int(std::string_view s) {
    std::int64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw error(errc::syntax, "bad integer '" + std::string(s) + "'");
    return v;
}

}  // namespace sco
