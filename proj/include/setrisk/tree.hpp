#pragma once

// Recombining lattice for correlated geometric Brownian motions with a
// risk-free bond. Asset 0 is the bond; assets 1..d-1 are risky.

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <limits>
#include <numbers>

#include "setrisk/common.hpp"
#include "setrisk/geometry.hpp"

namespace setrisk::tree {

enum class Compounding { continuous, simple };

inline std::string to_string(Compounding c) { return c == Compounding::continuous ? "continuous" : "simple"; }

struct TreeParams {
    std::size_t d = 2;
    std::size_t T = 1;
    double horizon = 1.0;
    std::size_t n = 2;
    double nu = 1.0;
    Vec mu;
    Vec sigma;
    Mat rho;  // (d-1)x(d-1), empty means identity
    Vec S0;
    double r = 0.0;
    Vec gamma;  // empty means frictionless
    Compounding compounding = Compounding::continuous;

    void validate() const {
        std::size_t k = d < 1 ? 0 : d - 1;
        if (d < 2) throw ValidationError("tree.d must be at least 2");
        if (T < 1) throw ValidationError("tree.T must be at least 1");
        if (!(horizon > 0)) throw ValidationError("tree.horizon must be positive");
        if (n < 2) throw ValidationError("tree.n must be at least 2");
        if (!(nu > 0)) throw ValidationError("tree.nu must be positive");
        if (mu.size() != k || sigma.size() != k || S0.size() != k)
            throw ValidationError("tree.mu, tree.sigma and tree.S0 need d-1 entries");
        for (double s : sigma)
            if (!(s > 0)) throw ValidationError("tree.sigma must be positive");
        for (double s : S0)
            if (!(s > 0)) throw ValidationError("tree.S0 must be positive");
        if (!gamma.empty()) {
            if (gamma.size() != k) throw ValidationError("gamma needs d-1 entries");
            for (double g : gamma)
                if (!(g >= 0 && g < 1)) throw ValidationError("gamma entries must lie in [0, 1)");
        }
        if (!rho.empty()) {
            if (rho.size() != k) throw ValidationError("tree.rho must be (d-1)x(d-1)");
            for (std::size_t i = 0; i < k; ++i) {
                if (rho[i].size() != k) throw ValidationError("tree.rho must be (d-1)x(d-1)");
                if (std::abs(rho[i][i] - 1.0) > 1e-12) throw ValidationError("tree.rho needs a unit diagonal");
                for (std::size_t j = 0; j < k; ++j) {
                    if (std::abs(rho[i][j] - rho[j][i]) > 1e-12) throw ValidationError("tree.rho must be symmetric");
                    if (std::abs(rho[i][j]) > 1.0) throw ValidationError("tree.rho entries must lie in [-1, 1]");
                }
            }
            Eigen::MatrixXd R(k, k);
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t j = 0; j < k; ++j) R(i, j) = rho[i][j];
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R);
            if (es.eigenvalues().minCoeff() < -1e-10) throw ValidationError("tree.rho is not positive semidefinite");
        }
    }

    double dt() const { return horizon / static_cast<double>(T); }
};

/// Grid coordinates -nu, -nu + 2nu/(n-1), ..., nu.
inline Vec grid(std::size_t n, double nu) {
    Vec g(n);
    for (std::size_t j = 0; j < n; ++j)
        g[j] = -nu + 2.0 * nu * static_cast<double>(j) / static_cast<double>(n - 1);
    return g;
}

/// Index digits of scenario s, first risky asset most significant.
inline std::vector<std::size_t> scenario_digits(std::size_t s, std::size_t n, std::size_t k) {
    std::vector<std::size_t> j(k);
    for (std::size_t i = k; i-- > 0;) {
        j[i] = s % n;
        s /= n;
    }
    return j;
}

inline std::vector<Vec> scenario_set(std::size_t n, double nu, std::size_t d) {
    if (n < 2) throw ValidationError("scenario_set: n must be at least 2");
    std::size_t k = d - 1, count = 1;
    for (std::size_t i = 0; i < k; ++i) count *= n;
    Vec g = grid(n, nu);
    std::vector<Vec> out;
    for (std::size_t s = 0; s < count; ++s) {
        Vec e(k);
        auto j = scenario_digits(s, n, k);
        for (std::size_t i = 0; i < k; ++i) e[i] = g[j[i]];
        out.push_back(e);
    }
    return out;
}

namespace detail {

inline double Phi(double x) {
    if (x == std::numeric_limits<double>::infinity()) return 1.0;
    if (x == -std::numeric_limits<double>::infinity()) return 0.0;
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

inline double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

/// Box (lo_i, hi_i] edges per grid index: midpoints, open at the ends.
inline std::pair<double, double> edges(std::size_t j, std::size_t n, double nu) {
    Vec g = grid(n, nu);
    double inf = std::numeric_limits<double>::infinity();
    double lo = j == 0 ? -inf : 0.5 * (g[j - 1] + g[j]);
    double hi = j + 1 == n ? inf : 0.5 * (g[j] + g[j + 1]);
    return {lo, hi};
}

/// P(a1 < X <= b1, a2 < Y <= b2) for a standard bivariate normal with correlation rho.
inline double bivariate_box(double a1, double b1, double a2, double b2, double rho) {
    constexpr double cut = 10.0;
    double lo = std::max(a1, -cut), hi = std::min(b1, cut);
    if (!(lo < hi)) return 0.0;
    double s2 = 1.0 - rho * rho;
    if (s2 <= 1e-14) {
        // Degenerate: Y = rho X with rho = +-1.
        double l = lo, h = hi;
        if (rho > 0) {
            l = std::max(l, a2);
            h = std::min(h, b2);
        } else {
            l = std::max(l, -b2);
            h = std::min(h, -a2);
        }
        return h > l ? Phi(h) - Phi(l) : 0.0;
    }
    double s = std::sqrt(s2);
    auto f = [&](double x) {
        double u = Phi((b2 - rho * x) / s) - Phi((a2 - rho * x) / s);
        return phi(x) * u;
    };
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 20, 1e-15, &err);
}

}  // namespace detail

/// Normal box masses in scenario_set order, renormalized to sum 1.
inline Vec box_probabilities(std::size_t n, double nu, const Mat& rho) {
    std::size_t k = rho.empty() ? 1 : rho.size();
    if (k > 2) throw UnsupportedError("box_probabilities: more than two risky assets");
    std::size_t count = k == 1 ? n : n * n;
    Vec p(count);
    for (std::size_t s = 0; s < count; ++s) {
        auto j = scenario_digits(s, n, k);
        if (k == 1) {
            auto [lo, hi] = detail::edges(j[0], n, nu);
            // Upper tail via the complement keeps relative accuracy.
            p[s] = hi <= 0 ? detail::Phi(hi) - detail::Phi(lo) : detail::Phi(-lo) - detail::Phi(-hi);
        } else {
            auto [a1, b1] = detail::edges(j[0], n, nu);
            auto [a2, b2] = detail::edges(j[1], n, nu);
            p[s] = detail::bivariate_box(a1, b1, a2, b2, rho[0][1]);
        }
    }
    double total = 0.0;
    for (double v : p) total += v;
    for (double& v : p) {
        v /= total;
        if (!(v > 0)) throw ModelError("box_probabilities: a scenario has zero probability");
    }
    return p;
}

struct Successor {
    std::size_t node;
    double prob;
};

struct Node {
    std::size_t id = 0;
    std::size_t time = 0;
    std::vector<std::size_t> state;  // cumulative grid-index sums per risky asset
    Vec S;    // mid prices, cash units
    Vec bid;
    Vec ask;
    double B = 1.0;
    std::vector<Successor> successors;
};

struct ScenarioTree {
    TreeParams params;
    std::vector<Node> nodes;
    std::vector<std::vector<std::size_t>> slices;  // node ids per time
    Vec probabilities;                              // per scenario, shared by all nodes

    std::size_t root() const { return slices.front().front(); }
    std::size_t steps() const { return slices.size() - 1; }
    const Node& node(std::size_t id) const { return nodes.at(id); }
    bool terminal(std::size_t id) const { return nodes.at(id).time + 1 == slices.size(); }

    /// Node reached by successor choices (scenario indices) from the root.
    std::size_t follow(std::span<const std::size_t> choices) const {
        std::size_t cur = root();
        for (std::size_t c : choices) {
            const auto& nd = nodes.at(cur);
            if (c >= nd.successors.size()) throw ValidationError("path choice out of range");
            cur = nd.successors[c].node;
        }
        return cur;
    }

    /// Readable node label "t/i1.i2".
    std::string label(std::size_t id) const {
        const auto& nd = nodes.at(id);
        std::string s = "t" + std::to_string(nd.time) + "/";
        for (std::size_t i = 0; i < nd.state.size(); ++i) {
            if (i) s += '.';
            s += std::to_string(nd.state[i]);
        }
        return s;
    }
};

inline double bond_value(const TreeParams& p, std::size_t t) {
    double tau = static_cast<double>(t) * p.dt();
    return p.compounding == Compounding::continuous ? std::exp(p.r * tau) : 1.0 + p.r * tau;
}

inline ScenarioTree build_tree(const TreeParams& p) {
    p.validate();
    const std::size_t k = p.d - 1;
    const double dt = p.dt();
    ScenarioTree tree;
    tree.params = p;
    Mat rho = p.rho;
    if (rho.empty()) {
        rho.assign(k, Vec(k, 0.0));
        for (std::size_t i = 0; i < k; ++i) rho[i][i] = 1.0;
    }
    tree.probabilities = box_probabilities(p.n, p.nu, rho);
    const std::size_t scen = tree.probabilities.size();
    const double step = 2.0 * p.nu / static_cast<double>(p.n - 1);

    std::size_t next_id = 0;
    for (std::size_t t = 0; t <= p.T; ++t) {
        std::size_t side = t * (p.n - 1) + 1, count = 1;
        for (std::size_t i = 0; i < k; ++i) {
            if (count > std::numeric_limits<std::size_t>::max() / side) throw ValidationError("tree too large");
            count *= side;
        }
        if (next_id + count > (std::size_t{1} << 26)) throw ValidationError("tree too large");
        std::vector<std::size_t> slice;
        double B = bond_value(p, t);
        for (std::size_t idx = 0; idx < count; ++idx) {
            Node nd;
            nd.id = next_id++;
            nd.time = t;
            nd.state = scenario_digits(idx, side, k);
            nd.B = B;
            for (std::size_t i = 0; i < k; ++i) {
                double incr = -static_cast<double>(t) * p.nu + step * static_cast<double>(nd.state[i]);
                double ex = (p.mu[i] - 0.5 * p.sigma[i] * p.sigma[i]) * static_cast<double>(t) * dt +
                            p.sigma[i] * std::sqrt(dt) * incr;
                double S = p.S0[i] * std::exp(ex);
                if (!std::isfinite(S) || !(S > 0) || std::abs(ex) > 700)
                    throw ValidationError("tree: price factor overflows at " + std::to_string(t));
                double g = p.gamma.empty() ? 0.0 : p.gamma[i];
                nd.S.push_back(S);
                nd.bid.push_back(S * (1 - g));
                nd.ask.push_back(S * (1 + g));
            }
            slice.push_back(nd.id);
            tree.nodes.push_back(std::move(nd));
        }
        tree.slices.push_back(std::move(slice));
    }
    for (std::size_t t = 0; t < p.T; ++t) {
        std::size_t side_next = (t + 1) * (p.n - 1) + 1;
        for (std::size_t id : tree.slices[t]) {
            auto& nd = tree.nodes[id];
            for (std::size_t s = 0; s < scen; ++s) {
                auto j = scenario_digits(s, p.n, k);
                std::size_t child = 0;
                for (std::size_t i = 0; i < k; ++i) child = child * side_next + nd.state[i] + j[i];
                nd.successors.push_back({tree.slices[t + 1][child], tree.probabilities[s]});
            }
        }
    }
    return tree;
}

inline std::string to_json(const ScenarioTree& tree) {
    using geometry::format_number;
    auto vec = [](const Vec& v) {
        std::string s = "[";
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_number(v[i]);
        return s + "]";
    };
    std::string j = "{\"d\":" + std::to_string(tree.params.d) + ",\"T\":" + std::to_string(tree.steps()) +
                    ",\"probabilities\":" + vec(tree.probabilities) + ",\"nodes\":[";
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const auto& nd = tree.nodes[i];
        j += i ? "," : "";
        j += "{\"id\":" + std::to_string(nd.id) + ",\"time\":" + std::to_string(nd.time) + ",\"state\":[";
        for (std::size_t s = 0; s < nd.state.size(); ++s) j += (s ? "," : "") + std::to_string(nd.state[s]);
        j += "],\"S\":" + vec(nd.S) + ",\"bid\":" + vec(nd.bid) + ",\"ask\":" + vec(nd.ask) +
             ",\"B\":" + format_number(nd.B) + ",\"successors\":[";
        for (std::size_t s = 0; s < nd.successors.size(); ++s)
            j += (s ? "," : "") + std::to_string(nd.successors[s].node);
        j += "]}";
    }
    return j + "]}";
}

}  // namespace setrisk::tree
