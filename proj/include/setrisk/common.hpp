#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace setrisk {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

/// Sparse row: (index, coefficient) pairs.
using SparseVec = std::vector<std::pair<std::size_t, double>>;

inline constexpr double kFeasTol = 1e-9;
inline constexpr double kSetTol = 1e-7;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValidationError : Error {
    using Error::Error;
};
struct InfeasibleError : Error {
    using Error::Error;
};
/// Upper image recedes outside the ordering cone, or is all of the space.
struct DegenerateError : Error {
    using Error::Error;
};
struct NumericFailure : Error {
    using Error::Error;
    Vec direction;
};
struct ModelError : Error {
    using Error::Error;
};
struct UnsupportedError : Error {
    using Error::Error;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double dot(const SparseVec& a, std::span<const double> x) {
    double s = 0.0;
    for (auto [i, v] : a) s += v * x[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

inline Vec add(std::span<const double> a, std::span<const double> b) {
    Vec r(a.begin(), a.end());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += b[i];
    return r;
}

inline Vec sub(std::span<const double> a, std::span<const double> b) {
    Vec r(a.begin(), a.end());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    return r;
}

inline Vec scale(std::span<const double> a, double s) {
    Vec r(a.begin(), a.end());
    for (double& v : r) v *= s;
    return r;
}

/// r += s * a
inline void axpy(double s, std::span<const double> a, std::span<double> r) {
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += s * a[i];
}

inline Vec unit(std::size_t d, std::size_t i) {
    Vec e(d, 0.0);
    e[i] = 1.0;
    return e;
}

/// Scales to unit max-norm; zero vectors are returned unchanged.
inline Vec normalized_inf(std::span<const double> a) {
    double n = norm_inf(a);
    return n > 0 ? scale(a, 1.0 / n) : Vec(a.begin(), a.end());
}

inline Vec normalized2(std::span<const double> a) {
    double n = norm2(a);
    return n > 0 ? scale(a, 1.0 / n) : Vec(a.begin(), a.end());
}

inline SparseVec sparse(std::span<const double> a, double drop = 0.0) {
    SparseVec s;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i]) > drop) s.emplace_back(i, a[i]);
    return s;
}

inline std::string to_string(std::span<const double> v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(v[i]);
    }
    return s + ")";
}

}  // namespace setrisk
