#pragma once

// Market frictions per node: proportional-cost solvency cones, the
// two-asset convex solvency region, and polyhedral trading constraints.

#include "setrisk/geometry.hpp"
#include "setrisk/lp.hpp"
#include "setrisk/tree.hpp"
#include "setrisk/vop.hpp"

namespace setrisk::market {

enum class Model { none, cone, convex };

inline std::string to_string(Model m) {
    switch (m) {
        case Model::none: return "none";
        case Model::cone: return "cone";
        case Model::convex: return "convex";
    }
    return "none";
}

struct SolvencyCone {
    std::vector<Vec> trades;      // 2(d-1) trade directions, unit max-norm
    std::vector<Vec> generators;  // trades followed by the d unit vectors
    geometry::OrderingCone cone;
};

/// Columns (ask_i/B, -e_i) and (-bid_i/B, +e_i) plus the unit vectors.
inline SolvencyCone proportional_cone(std::span<const double> bid, std::span<const double> ask, double B) {
    if (!(B > 0)) throw ValidationError("proportional_cone: bond price must be positive");
    const std::size_t d = bid.size() + 1;
    SolvencyCone K;
    for (std::size_t i = 0; i < bid.size(); ++i) {
        if (!(bid[i] > 0) || !(ask[i] >= bid[i])) throw ValidationError("proportional_cone: need 0 < bid <= ask");
        Vec buy(d, 0.0), sell(d, 0.0);
        buy[0] = ask[i] / B;
        buy[i + 1] = -1.0;
        sell[0] = -bid[i] / B;
        sell[i + 1] = 1.0;
        K.trades.push_back(normalized_inf(buy));
        K.trades.push_back(normalized_inf(sell));
    }
    K.generators = K.trades;
    for (std::size_t i = 0; i < d; ++i) K.generators.push_back(unit(d, i));
    K.cone = geometry::OrderingCone::from_generators(d, K.generators);
    return K;
}

inline SolvencyCone proportional_cone(const tree::Node& nd) { return proportional_cone(nd.bid, nd.ask, nd.B); }

/// Two-asset convex solvency region given by K+(k) >= 0.
struct ConvexRegion {
    double theta0 = 0.0;
    double theta1 = 0.0;
    double bid = 1.0;
    double ask = 1.0;

    void validate() const {
        if (!(theta0 > 0 && theta1 > 0)) throw ValidationError("market.theta entries must be positive");
        if (!(bid > 0 && ask >= bid)) throw ValidationError("convex region: need 0 < bid <= ask");
    }
};

inline Vec convex_region_eval(std::span<const double> k, const ConvexRegion& R) {
    auto ex = [](double v) { return std::exp(std::min(v, vop::kMaxExponent)); };
    return {k[0] + R.theta0 * (1.0 - ex(-R.bid * k[1] / R.theta0)),
            R.theta1 * (1.0 - ex(-k[0] / (R.ask * R.theta1))) + k[1]};
}

inline bool region_contains(std::span<const double> k, const ConvexRegion& R, double tol = 1e-12) {
    Vec v = convex_region_eval(k, R);
    double s = std::max(1.0, norm_inf(k));
    return v[0] >= -tol * s && v[1] >= -tol * s;
}

/// The two constraints -K+(k) <= 0 on variables k = (x[k0], x[k0+1]).
inline std::vector<vop::ConvexFunction> region_constraints(const ConvexRegion& R, std::size_t k0) {
    std::vector<vop::ConvexFunction> out;
    out.push_back(vop::exp_sum(-R.theta0, {{k0, -1.0}}, {{R.theta0, {{k0 + 1, -R.bid / R.theta0}}, 0.0}}));
    out.push_back(vop::exp_sum(-R.theta1, {{k0 + 1, -1.0}}, {{R.theta1, {{k0, -1.0 / (R.ask * R.theta1)}}, 0.0}}));
    return out;
}

struct MarketSpec {
    Model model = Model::none;
    Vec theta;                                   // convex model
    std::vector<geometry::Halfspace> D;          // optional trading constraint {k : a.k >= b}

    bool active() const { return model != Model::none; }
};

/// Per-node trading set K_t (or K_t cap D_t) in the form the node VOP consumes.
struct MarketSet {
    Model model = Model::none;
    std::size_t d = 0;
    SolvencyCone cone;                           // cone model
    ConvexRegion region;                         // convex model
    std::vector<geometry::Halfspace> D;
    /// Replace the ordering cone instead of adding a trade variable.
    bool as_ordering_cone() const { return model == Model::cone && D.empty(); }
    bool has_trade_variable() const { return model != Model::none && !as_ordering_cone(); }
    /// Generators of the recession cone of the trading set; used by the forward pass.
    std::vector<Vec> trade_directions;

    /// Ordering cone of a node VOP that carries the trade variable: R^d_+
    /// together with the recession directions of the trading set.
    geometry::OrderingCone trade_ordering_cone() const {
        std::vector<Vec> gens;
        for (std::size_t i = 0; i < d; ++i) gens.push_back(unit(d, i));
        if (model != Model::cone) return geometry::OrderingCone::orthant(d);
        for (const auto& t : trade_directions) geometry::detail::push_unique(gens, t, 1e-9);
        if (gens.size() == d) return geometry::OrderingCone::orthant(d);
        return geometry::OrderingCone::from_generators(d, gens);
    }

    std::size_t linear_constraint_count() const {
        std::size_t c = D.size();
        if (model == Model::cone && !D.empty()) c += cone.cone.dual_generators().size();
        return c;
    }
    std::size_t convex_constraint_count() const { return model == Model::convex ? 2 : 0; }

    /// Adds k in the trading set for variables x[k0..k0+d).
    void constrain(vop::VectorProblem& p, std::size_t k0) const {
        if (model == Model::cone) {
            for (const auto& w : cone.cone.dual_generators()) {
                SparseVec row;
                for (std::size_t i = 0; i < d; ++i)
                    if (w[i] != 0) row.emplace_back(k0 + i, w[i]);
                p.add_row(row, lp::Relation::GreaterEqual, 0.0);
            }
        } else if (model == Model::convex) {
            for (auto& g : region_constraints(region, k0)) p.convex.push_back(std::move(g));
        }
        for (const auto& h : D) {
            SparseVec row;
            for (std::size_t i = 0; i < d; ++i)
                if (h.normal[i] != 0) row.emplace_back(k0 + i, h.normal[i]);
            p.add_row(row, lp::Relation::GreaterEqual, h.offset);
        }
    }

    bool contains(std::span<const double> k, double tol = kFeasTol) const {
        double s = std::max(1.0, norm_inf(k));
        for (const auto& h : D)
            if (dot(h.normal, k) < h.offset - tol * s) return false;
        if (model == Model::cone) return cone.cone.contains(k, tol);
        if (model == Model::convex) {
            Vec v = convex_region_eval(k, region);
            return v[0] >= -tol * s && v[1] >= -tol * s;
        }
        return true;
    }
};

namespace detail {

/// Extreme rays of {k : dual rows >= 0, D normals . k >= 0}.
inline std::vector<Vec> recession_generators(std::size_t d, const std::vector<Vec>& rows) {
    setrisk::detail::ConeEnumerator dd(d);
    for (const auto& r : rows) dd.add(r);
    std::vector<Vec> out;
    for (const auto& r : dd.rays()) geometry::detail::push_unique(out, normalized_inf(r), 1e-9);
    for (const auto& l : dd.lineality()) {
        geometry::detail::push_unique(out, normalized_inf(l), 1e-9);
        geometry::detail::push_unique(out, normalized_inf(scale(l, -1.0)), 1e-9);
    }
    return out;
}

}  // namespace detail

inline MarketSet market_set(const tree::Node& nd, const MarketSpec& spec) {
    MarketSet ms;
    ms.model = spec.model;
    ms.d = nd.S.size() + 1;
    ms.D = spec.D;
    for (const auto& h : spec.D)
        if (h.normal.size() != ms.d) throw ValidationError("market.D rows need d coefficients");
    if (spec.model == Model::none) return ms;
    if (spec.model == Model::cone) {
        ms.cone = proportional_cone(nd);
        if (spec.D.empty()) {
            ms.trade_directions = ms.cone.trades;
            return ms;
        }
        // Nonempty K cap D: minimize 0 over the rows.
        lp::LinearProgram prog;
        for (std::size_t i = 0; i < ms.d; ++i) prog.add_variable();
        for (const auto& w : ms.cone.cone.dual_generators()) prog.add(sparse(w), lp::Relation::GreaterEqual, 0.0);
        for (const auto& h : spec.D) prog.add(sparse(h.normal), lp::Relation::GreaterEqual, h.offset);
        if (lp::solve(prog).status == lp::Status::Infeasible)
            throw ModelError("market: K cap D is empty at node t=" + std::to_string(nd.time));
        std::vector<Vec> rows = ms.cone.cone.dual_generators();
        for (const auto& h : spec.D) rows.push_back(h.normal);
        ms.trade_directions = detail::recession_generators(ms.d, rows);
        return ms;
    }
    if (ms.d != 2) throw ValidationError("market: the convex solvency region needs d = 2");
    if (spec.theta.size() != 2) throw ValidationError("market.theta needs two entries");
    ms.region = {spec.theta[0], spec.theta[1], nd.bid[0], nd.ask[0]};
    ms.region.validate();
    if (!spec.D.empty()) {
        // 0 lies in the region; when D excludes 0, search K cap D by cutting planes.
        bool ok = true;
        for (const auto& h : spec.D) ok = ok && h.offset <= 0;
        if (!ok) {
            vop::VectorProblem p;
            p.add_variables(2);
            ms.constrain(p, 0);
            lp::LinearProgram prog;
            prog.add_variable();
            prog.add_variable();
            for (const auto& r : p.rows) prog.add(r.row, r.rel, r.rhs);
            bool found = false;
            for (int it = 0; it < 200 && !found; ++it) {
                auto res = lp::solve(prog);
                if (res.status == lp::Status::Infeasible) break;
                Vec x = res.optimal() ? res.x : Vec{0.0, 0.0};
                found = true;
                for (const auto& g : p.convex) {
                    double v = g.value(x);
                    if (v > 1e-9) {
                        found = false;
                        Vec gr(2);
                        g.gradient(x, gr);
                        prog.add(sparse(scale(gr, -1.0)), lp::Relation::GreaterEqual, v - dot(gr, x));
                    }
                }
            }
            if (!found) throw ModelError("market: K cap D is empty at node t=" + std::to_string(nd.time));
        }
    }
    // The region recedes along R^2_+ only; D can only shrink that.
    return ms;
}

}  // namespace setrisk::market
