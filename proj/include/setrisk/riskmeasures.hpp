#pragma once

// One-period risk measures as VOP constraint builders.
//
// Every builder encodes Y in R(X) for positions X(s) over scenarios s with
// conditional probabilities p(s). Positions and Y are affine in the VOP
// variables, so the same code serves terminal nodes (one scenario, X fixed)
// and interior nodes (X = -Z(child)).

#include <map>

#include "setrisk/geometry.hpp"
#include "setrisk/market.hpp"
#include "setrisk/tree.hpp"
#include "setrisk/vop.hpp"

namespace setrisk::risk {

enum class Kind { worst_case, relaxed_worst_case, avar, entropic };

inline std::string to_string(Kind k) {
    switch (k) {
        case Kind::worst_case: return "worst_case";
        case Kind::relaxed_worst_case: return "relaxed_worst_case";
        case Kind::avar: return "avar";
        case Kind::entropic: return "entropic";
    }
    return "worst_case";
}

inline Kind kind_from_string(const std::string& s) {
    if (s == "worst_case") return Kind::worst_case;
    if (s == "relaxed_worst_case") return Kind::relaxed_worst_case;
    if (s == "avar") return Kind::avar;
    if (s == "entropic") return Kind::entropic;
    throw ValidationError("risk.kind: unknown measure '" + s + "'");
}

struct RiskMeasureSpec {
    Kind kind = Kind::worst_case;
    Vec lambda;                  // avar: (0,1)^d; entropic: risk aversion > 0
    Vec epsilon;                 // relaxed worst case
    std::vector<Vec> G;          // relaxed worst case cone generators; empty means R^d_+
    std::vector<Vec> C_dual;     // entropic; empty means R^d_+
    std::vector<Vec> M_basis;    // eligible subspace basis; empty means R^d

    bool convex() const { return kind == Kind::entropic; }

    void validate(std::size_t d) const {
        auto need = [&](const Vec& v, const char* name) {
            if (v.size() != d) throw ValidationError(std::string("risk.") + name + " needs d entries");
        };
        switch (kind) {
            case Kind::worst_case: break;
            case Kind::avar:
                need(lambda, "lambda");
                for (double l : lambda)
                    if (!(l > 0 && l < 1)) throw ValidationError("risk.lambda entries must lie in (0, 1)");
                break;
            case Kind::entropic:
                need(lambda, "lambda");
                for (double l : lambda)
                    if (!(l > 0)) throw ValidationError("risk.lambda entries must be positive");
                for (const auto& w : C_dual) {
                    need(w, "C_dual");
                    for (double v : w)
                        if (v < 0)
                            throw ValidationError("risk.C_dual has a negative component; the entropic constraint is not convex");
                    if (norm_inf(w) == 0) throw ValidationError("risk.C_dual has a zero generator");
                }
                break;
            case Kind::relaxed_worst_case: {
                need(epsilon, "epsilon");
                for (double e : epsilon)
                    if (!(e >= 0)) throw ValidationError("risk.epsilon entries must be nonnegative");
                for (const auto& g : G) need(g, "G");
                auto cone = G_cone(d);
                for (std::size_t i = 0; i < d; ++i)
                    if (!cone.contains(unit(d, i), 1e-12)) throw ValidationError("risk.G must contain R^d_+");
                break;
            }
        }
        for (const auto& b : M_basis) need(b, "M_basis");
        if (M_basis.size() > d) throw ValidationError("risk.M_basis has more than d vectors");
        if (!M_basis.empty()) {
            Eigen::MatrixXd A(d, M_basis.size());
            for (std::size_t j = 0; j < M_basis.size(); ++j)
                for (std::size_t i = 0; i < d; ++i) A(i, j) = M_basis[j][i];
            if (Eigen::FullPivLU<Eigen::MatrixXd>(A).rank() != static_cast<long>(M_basis.size()))
                throw ValidationError("risk.M_basis vectors are linearly dependent");
        }
    }

    geometry::OrderingCone G_cone(std::size_t d) const {
        if (G.empty()) return geometry::OrderingCone::orthant(d);
        return geometry::OrderingCone::from_generators(d, G);
    }

    std::vector<Vec> C_duals(std::size_t d) const {
        if (!C_dual.empty()) return C_dual;
        std::vector<Vec> out;
        for (std::size_t i = 0; i < d; ++i) out.push_back(unit(d, i));
        return out;
    }
};

/// Eligible space M = span(basis) with its ordering cone M_+ = M cap R^d_+ in coordinates.
struct Eligible {
    std::size_t d = 0;
    std::vector<Vec> basis;  // q vectors in R^d
    geometry::OrderingCone cone;

    std::size_t q() const { return basis.size(); }
    bool full() const {
        if (basis.size() != d) return false;
        for (std::size_t j = 0; j < d; ++j)
            if (norm_inf(sub(basis[j], unit(d, j))) != 0) return false;
        return true;
    }
    Vec to_full(std::span<const double> y) const {
        Vec v(d, 0.0);
        for (std::size_t j = 0; j < basis.size(); ++j) axpy(y[j], basis[j], v);
        return v;
    }
    /// Coordinates of v in the basis (least squares); residual norm in second.
    std::pair<Vec, double> coordinates(std::span<const double> v) const {
        Eigen::MatrixXd A(d, basis.size());
        Eigen::VectorXd b(d);
        for (std::size_t i = 0; i < d; ++i) {
            b(i) = v[i];
            for (std::size_t j = 0; j < basis.size(); ++j) A(i, j) = basis[j][i];
        }
        Eigen::VectorXd y = A.colPivHouseholderQr().solve(b);
        Vec out(y.data(), y.data() + y.size());
        return {out, norm_inf(sub(to_full(out), Vec(v.begin(), v.end())))};
    }
};

inline Eligible eligible(const RiskMeasureSpec& spec, std::size_t d) {
    Eligible e;
    e.d = d;
    if (spec.M_basis.empty()) {
        for (std::size_t i = 0; i < d; ++i) e.basis.push_back(unit(d, i));
        e.cone = geometry::OrderingCone::orthant(d);
        return e;
    }
    e.basis = spec.M_basis;
    std::vector<Vec> rows;
    for (std::size_t i = 0; i < d; ++i) {
        Vec r(e.basis.size());
        for (std::size_t j = 0; j < r.size(); ++j) r[j] = e.basis[j][i];
        if (norm_inf(r) > 0) rows.push_back(r);
    }
    try {
        e.cone = geometry::OrderingCone::from_dual(e.basis.size(), rows);
    } catch (const ValidationError& err) {
        throw ValidationError(std::string("risk.M_basis: M cap R^d_+ is not a usable ordering cone: ") + err.what());
    }
    return e;
}

// ---------------------------------------------------------------------------
// Affine expressions in the VOP variables.

struct Affine {
    SparseVec a;
    double c = 0.0;
};
using AffineVec = std::vector<Affine>;

inline SparseVec canonical(SparseVec v) {
    std::sort(v.begin(), v.end());
    SparseVec out;
    for (auto [i, x] : v) {
        if (!out.empty() && out.back().first == i)
            out.back().second += x;
        else
            out.emplace_back(i, x);
    }
    std::erase_if(out, [](const auto& e) { return e.second == 0.0; });
    return out;
}

/// sum_k coef_k * e_k
inline Affine combine(std::initializer_list<std::pair<double, const Affine*>> terms) {
    Affine r;
    for (auto [w, e] : terms) {
        for (auto [i, x] : e->a) r.a.emplace_back(i, w * x);
        r.c += w * e->c;
    }
    r.a = canonical(std::move(r.a));
    return r;
}

inline AffineVec constant(std::span<const double> v) {
    AffineVec r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) r[i].c = v[i];
    return r;
}

/// Full-space image of coordinate variables x[first..first+q) under the basis.
inline AffineVec embed(const Eligible& M, std::size_t first, double sign = 1.0) {
    AffineVec r(M.d);
    for (std::size_t i = 0; i < M.d; ++i) {
        for (std::size_t j = 0; j < M.q(); ++j)
            if (M.basis[j][i] != 0) r[i].a.emplace_back(first + j, sign * M.basis[j][i]);
    }
    return r;
}

inline void add_ge(vop::VectorProblem& p, const Affine& e, double rhs) {
    // e >= rhs  <=>  e.a . x >= rhs - e.c
    double b = rhs - e.c;
    if (e.a.empty()) {
        if (b > kFeasTol * std::max(1.0, std::abs(rhs))) throw InfeasibleError("constant constraint violated");
        return;
    }
    p.add_row(e.a, lp::Relation::GreaterEqual, b);
}

/// Adds Y in R(X) for the one-period measure.
inline void add_measure(vop::VectorProblem& p, const RiskMeasureSpec& spec, const std::vector<AffineVec>& X,
                        std::span<const double> prob, const AffineVec& Y) {
    const std::size_t d = Y.size();
    const std::size_t S = X.size();
    switch (spec.kind) {
        case Kind::worst_case:
            for (std::size_t s = 0; s < S; ++s)
                for (std::size_t i = 0; i < d; ++i) add_ge(p, combine({{1.0, &X[s][i]}, {1.0, &Y[i]}}), 0.0);
            break;
        case Kind::relaxed_worst_case: {
            auto duals = spec.G_cone(d).dual_generators();
            for (std::size_t s = 0; s < S; ++s) {
                AffineVec sum(d);
                for (std::size_t i = 0; i < d; ++i) {
                    sum[i] = combine({{1.0, &X[s][i]}, {1.0, &Y[i]}});
                    add_ge(p, sum[i], -spec.epsilon[i]);
                }
                for (const auto& w : duals) {
                    Affine e;
                    for (std::size_t i = 0; i < d; ++i) {
                        if (w[i] == 0) continue;
                        for (auto [j, x] : sum[i].a) e.a.emplace_back(j, w[i] * x);
                        e.c += w[i] * sum[i].c;
                    }
                    e.a = canonical(std::move(e.a));
                    // Pure orthant duals repeat the epsilon rows when epsilon = 0; keep them anyway.
                    add_ge(p, e, 0.0);
                }
            }
            break;
        }
        case Kind::avar: {
            // Z'(s) >= 0, X(s) + Z'(s) - z >= 0, Y >= diag(lambda)^-1 sum_s p(s) Z'(s) - z
            std::size_t zp = p.add_variables(S * d);
            std::size_t z = p.add_variables(d);
            for (std::size_t s = 0; s < S; ++s)
                for (std::size_t i = 0; i < d; ++i) {
                    std::size_t v = zp + s * d + i;
                    p.add_row({{v, 1.0}}, lp::Relation::GreaterEqual, 0.0);
                    Affine e = X[s][i];
                    e.a.emplace_back(v, 1.0);
                    e.a.emplace_back(z + i, -1.0);
                    e.a = canonical(std::move(e.a));
                    add_ge(p, e, 0.0);
                }
            for (std::size_t i = 0; i < d; ++i) {
                Affine e = Y[i];
                for (std::size_t s = 0; s < S; ++s) e.a.emplace_back(zp + s * d + i, -prob[s] / spec.lambda[i]);
                e.a.emplace_back(z + i, 1.0);
                e.a = canonical(std::move(e.a));
                add_ge(p, e, 0.0);
            }
            break;
        }
        case Kind::entropic: {
            // w . E[u(X + Y)] >= 0 with u_i(v) = (1 - exp(-lambda_i v)) / lambda_i, written as
            // sum_i sum_s (w_i p_s / lambda_i) exp(-lambda_i (X_si + Y_i)) - sum_i w_i / lambda_i <= 0.
            for (const auto& w : spec.C_duals(d)) {
                double constant = 0.0;
                std::vector<vop::ExpTerm> terms;
                for (std::size_t i = 0; i < d; ++i) {
                    if (w[i] == 0) continue;
                    const double l = spec.lambda[i];
                    constant -= w[i] / l;
                    for (std::size_t s = 0; s < S; ++s) {
                        Affine e = combine({{1.0, &X[s][i]}, {1.0, &Y[i]}});
                        double coef = w[i] * prob[s] / l;
                        if (e.a.empty()) {
                            constant += coef * std::exp(std::min(-l * e.c, vop::kMaxExponent));
                            continue;
                        }
                        vop::ExpTerm t;
                        t.coef = coef;
                        for (auto [j, x] : e.a) t.form.emplace_back(j, -l * x);
                        t.shift = -l * e.c;
                        terms.push_back(std::move(t));
                    }
                }
                if (terms.empty()) {
                    if (constant > 1e-12) throw InfeasibleError("entropic constraint cannot hold");
                    continue;
                }
                p.convex.push_back(vop::exp_sum(constant, {}, std::move(terms)));
            }
            break;
        }
    }
}

// ---------------------------------------------------------------------------
// Node problems.

struct NodeProblem {
    vop::VectorProblem vp;
    std::vector<std::size_t> z_first;  // coordinates of Z(child s), q each
    std::size_t y_first = 0;           // coordinates of Y, q
    std::optional<std::size_t> k_first;  // market trade, d

    Vec Z(std::span<const double> x, std::size_t s, std::size_t q) const {
        return {x.begin() + z_first[s], x.begin() + z_first[s] + q};
    }
    Vec Y(std::span<const double> x, std::size_t q) const { return {x.begin() + y_first, x.begin() + y_first + q}; }
    Vec k(std::span<const double> x, std::size_t d) const {
        if (!k_first) return Vec(d, 0.0);
        return {x.begin() + *k_first, x.begin() + *k_first + d};
    }
};

namespace detail {

/// Image = Y (+ k); ordering cone M_+ or the node solvency cone.
inline void finish(NodeProblem& np, const Eligible& M, const market::MarketSet* ms, const Vec& m) {
    auto& p = np.vp;
    const std::size_t q = M.q();
    p.objective.assign(q, {});
    p.offset.assign(q, 0.0);
    for (std::size_t j = 0; j < q; ++j) p.objective[j].emplace_back(np.y_first + j, 1.0);
    p.cone = M.cone;
    if (ms && ms->model != market::Model::none) {
        if (!M.full()) throw ValidationError("market extension requires M = R^d");
        if (ms->as_ordering_cone()) {
            p.cone = ms->cone.cone;
        } else {
            p.cone = ms->trade_ordering_cone();
            np.k_first = p.add_variables(M.d);
            ms->constrain(p, *np.k_first);
            for (std::size_t j = 0; j < q; ++j) p.objective[j].emplace_back(*np.k_first + j, 1.0);
        }
    }
    p.m = m;
}

}  // namespace detail

/// cl R_T(X)[w_T] (+ K_T): the measure on a single scenario with X fixed.
inline NodeProblem terminal_problem(const RiskMeasureSpec& spec, const Eligible& M, std::span<const double> X,
                                    const market::MarketSet* ms, const Vec& m) {
    if (X.size() != M.d) throw ValidationError("terminal payoff has wrong dimension");
    NodeProblem np;
    np.y_first = np.vp.add_variables(M.q());
    std::vector<AffineVec> Xs{constant(X)};
    Vec one{1.0};
    add_measure(np.vp, spec, Xs, one, embed(M, np.y_first));
    detail::finish(np, M, ms, m);
    return np;
}

/// Node VOP: min Y (+ k) s.t. Z(s) in child set s, Y in R(-Z) over the successors.
inline NodeProblem onestep_problem(const RiskMeasureSpec& spec, const Eligible& M, std::span<const double> prob,
                                   const std::vector<const geometry::Polyhedron*>& children,
                                   const market::MarketSet* ms, const Vec& m) {
    if (children.size() != prob.size()) throw ValidationError("onestep_problem: children and probabilities differ");
    NodeProblem np;
    auto& p = np.vp;
    const std::size_t q = M.q();
    std::vector<AffineVec> Xs;
    for (std::size_t s = 0; s < children.size(); ++s) {
        const auto* P = children[s];
        if (!P || P->dim != q) throw ValidationError("onestep_problem: child set has wrong dimension");
        std::size_t first = p.add_variables(q);
        np.z_first.push_back(first);
        for (const auto& h : P->halfspaces) {
            SparseVec row;
            for (std::size_t j = 0; j < q; ++j)
                if (h.normal[j] != 0) row.emplace_back(first + j, h.normal[j]);
            p.add_row(row, lp::Relation::GreaterEqual, h.offset);
        }
        Xs.push_back(embed(M, first, -1.0));
    }
    np.y_first = p.add_variables(q);
    add_measure(p, spec, Xs, prob, embed(M, np.y_first));
    detail::finish(np, M, ms, m);
    return np;
}

// ---------------------------------------------------------------------------
// Direct membership tests, independent of the VOP encoding.

/// Scalar AV@R via the Rockafellar-Uryasev formula min_z (1/lambda) E[(z - X)^+] - z.
inline double scalar_avar(std::span<const double> x, std::span<const double> prob, double lambda) {
    double best = std::numeric_limits<double>::infinity();
    for (double z : x) {
        double e = 0.0;
        for (std::size_t s = 0; s < x.size(); ++s) e += prob[s] * std::max(z - x[s], 0.0);
        best = std::min(best, e / lambda - z);
    }
    return best;
}

/// Largest constraint violation of Y in R(X) (<= 0 means Y in R(X)); X given per scenario in full coordinates.
inline double measure_violation(const RiskMeasureSpec& spec, const std::vector<Vec>& X, std::span<const double> prob,
                                std::span<const double> Y) {
    const std::size_t d = Y.size();
    double worst = -lp::kInf;
    switch (spec.kind) {
        case Kind::worst_case:
            for (const auto& x : X)
                for (std::size_t i = 0; i < d; ++i) worst = std::max(worst, -(x[i] + Y[i]));
            break;
        case Kind::relaxed_worst_case: {
            auto duals = spec.G_cone(d).dual_generators();
            for (const auto& x : X) {
                Vec v = add(x, Y);
                for (std::size_t i = 0; i < d; ++i) worst = std::max(worst, -spec.epsilon[i] - v[i]);
                for (const auto& w : duals) worst = std::max(worst, -dot(w, v));
            }
            break;
        }
        case Kind::avar:
            for (std::size_t i = 0; i < d; ++i) {
                Vec xi(X.size());
                for (std::size_t s = 0; s < X.size(); ++s) xi[s] = X[s][i];
                worst = std::max(worst, scalar_avar(xi, prob, spec.lambda[i]) - Y[i]);
            }
            break;
        case Kind::entropic:
            for (const auto& w : spec.C_duals(d)) {
                double v = 0.0;
                for (std::size_t i = 0; i < d; ++i) {
                    if (w[i] == 0) continue;
                    const double l = spec.lambda[i];
                    for (std::size_t s = 0; s < X.size(); ++s)
                        v += w[i] * prob[s] * (1.0 - std::exp(std::min(-l * (X[s][i] + Y[i]), vop::kMaxExponent))) / l;
                }
                worst = std::max(worst, -v);
            }
            break;
    }
    return worst;
}

/// Y in R(X) up to tol scaled by the magnitudes involved.
inline bool measure_contains(const RiskMeasureSpec& spec, const std::vector<Vec>& X, std::span<const double> prob,
                             std::span<const double> Y, double tol = 1e-9) {
    double s = std::max(1.0, norm_inf(Y));
    for (const auto& x : X) s = std::max(s, norm_inf(x));
    return measure_violation(spec, X, prob, Y) <= tol * s;
}

// ---------------------------------------------------------------------------
// Payoffs: one d-vector per terminal node, indexed by node id.

using Payoff = std::map<std::size_t, Vec>;

enum class Price { mid, bid, ask };

inline Price price_from_string(const std::string& s) {
    if (s == "mid") return Price::mid;
    if (s == "bid") return Price::bid;
    if (s == "ask") return Price::ask;
    throw ValidationError("payoff.settlement must be mid, bid or ask");
}

inline std::string to_string(Price p) { return p == Price::mid ? "mid" : (p == Price::bid ? "bid" : "ask"); }

inline const Vec& price(const tree::Node& nd, Price p) {
    return p == Price::mid ? nd.S : (p == Price::bid ? nd.bid : nd.ask);
}

/// Claim ((K - S_T)^+, 0, ...) on the first risky asset.
inline Payoff put_claim(const tree::ScenarioTree& tr, double K, Price settle) {
    Payoff X;
    for (std::size_t id : tr.slices.back()) {
        Vec v(tr.params.d, 0.0);
        v[0] = std::max(K - price(tr.node(id), settle)[0], 0.0);
        X[id] = v;
    }
    return X;
}

/// Claim (payout * 1{S_T >= K}, 0, ...) on the first risky asset.
inline Payoff binary_claim(const tree::ScenarioTree& tr, double K, double payout, Price settle) {
    Payoff X;
    for (std::size_t id : tr.slices.back()) {
        Vec v(tr.params.d, 0.0);
        if (price(tr.node(id), settle)[0] >= K) v[0] = payout;
        X[id] = v;
    }
    return X;
}

/// Claim delivering the best risky asset against K cash when it finishes at or above K.
inline Payoff outperformance_claim(const tree::ScenarioTree& tr, double K, Price settle) {
    Payoff X;
    const std::size_t k = tr.params.d - 1;
    for (std::size_t id : tr.slices.back()) {
        const Vec& S = price(tr.node(id), settle);
        Vec v(tr.params.d, 0.0);
        double best = *std::max_element(S.begin(), S.end());
        if (best >= K) {
            v[0] = -K;
            for (std::size_t i = 0; i < k; ++i) {
                bool top = S[i] >= K;
                for (std::size_t j = 0; j < k; ++j) top = top && S[i] >= S[j];
                if (top) v[i + 1] = 1.0;
            }
        }
        X[id] = v;
    }
    return X;
}

inline Payoff negate(const Payoff& X) {
    Payoff r;
    for (const auto& [id, v] : X) r[id] = scale(v, -1.0);
    return r;
}

}  // namespace setrisk::risk
