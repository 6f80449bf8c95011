#pragma once

// Forward pass along a realized path: pick convex weights of the stored node
// solutions, read off the next holdings and trades, and check the Bellman
// inclusions afterwards.

#include <cstdint>
#include <random>
#include <sstream>

#include "setrisk/recursion.hpp"

namespace setrisk::strategy {

struct Weights {
    Vec lambda;  // over node solutions
    Vec alpha;   // over trade directions
    Vec Z;       // sum lambda y + sum alpha g
    double value = 0.0;
};

/// min c . Z*  s.t.  Z* = sum lambda_i y^i + sum alpha_j g^j <= Z_in, sum lambda = 1, lambda, alpha >= 0.
inline Weights choose_weights(std::span<const double> Z_in, const std::vector<Vec>& images,
                              const std::vector<Vec>& directions, std::span<const double> c, double tol = 1e-9) {
    if (images.empty()) throw InfeasibleError("choose_weights: no node solutions");
    const std::size_t q = Z_in.size(), n = images.size(), g = directions.size();
    lp::LinearProgram prog;
    for (std::size_t i = 0; i < n; ++i) prog.add_variable(0.0, lp::kInf, dot(c, images[i]));
    for (std::size_t j = 0; j < g; ++j) prog.add_variable(0.0, lp::kInf, dot(c, directions[j]));
    const double slack = tol * std::max(1.0, norm_inf(Z_in));
    for (std::size_t r = 0; r < q; ++r) {
        SparseVec row;
        for (std::size_t i = 0; i < n; ++i)
            if (images[i][r] != 0) row.emplace_back(i, images[i][r]);
        for (std::size_t j = 0; j < g; ++j)
            if (directions[j][r] != 0) row.emplace_back(n + j, directions[j][r]);
        prog.add(row, lp::Relation::LessEqual, Z_in[r] + slack);
    }
    SparseVec ones;
    for (std::size_t i = 0; i < n; ++i) ones.emplace_back(i, 1.0);
    prog.add(ones, lp::Relation::Equal, 1.0);
    auto res = lp::solve(prog);
    if (res.status == lp::Status::Infeasible)
        throw InfeasibleError("choose_weights: Z = " + to_string(Z_in) + " lies outside the node set");
    if (!res.optimal()) throw NumericFailure("choose_weights: weight LP did not solve");
    Weights w;
    w.lambda.assign(res.x.begin(), res.x.begin() + static_cast<long>(n));
    w.alpha.assign(res.x.begin() + static_cast<long>(n), res.x.end());
    double total = 0.0;
    for (auto& v : w.lambda) total += v = std::max(v, 0.0);
    for (auto& v : w.lambda) v /= total;
    for (auto& v : w.alpha) v = std::max(v, 0.0);
    w.Z.assign(q, 0.0);
    for (std::size_t i = 0; i < n; ++i) axpy(w.lambda[i], images[i], w.Z);
    for (std::size_t j = 0; j < g; ++j) axpy(w.alpha[j], directions[j], w.Z);
    w.value = res.value;
    return w;
}

struct Step {
    std::size_t node = 0;
    Vec Z;                     // holdings before trading, full coordinates
    Vec u;                     // injection
    Vec k;                     // trade
    Vec lambda;
    Vec alpha;
    double shift = 0.0;        // move into the inner set along m
    std::vector<Vec> Z_next;   // planned holdings at every successor, full coordinates
};

struct StrategyTrace {
    std::vector<std::size_t> path;
    std::vector<Step> steps;
    Vec cost;
    std::optional<std::uint64_t> seed;
};

inline Vec default_cost(std::size_t d) { return unit(d, 0); }

namespace detail {

inline Vec coords(const recursion::RunResult& run, std::span<const double> v) {
    if (run.M.full()) return {v.begin(), v.end()};
    return run.M.coordinates(v).first;
}

}  // namespace detail

/// Convex weights step by step along `path` (root first), starting at path[from] with holdings Z_from.
inline StrategyTrace forward_pass(const recursion::RunResult& run, const std::vector<std::size_t>& path,
                                  std::span<const double> Z_from, std::span<const double> c, std::size_t from = 0) {
    const auto& tr = *run.tree;
    if (path.size() != tr.slices.size()) throw ValidationError("path must list one node per time");
    if (path.front() != tr.root()) throw ValidationError("path must start at the root");
    for (std::size_t t = 0; t + 1 < path.size(); ++t) {
        bool ok = false;
        for (const auto& s : tr.node(path[t]).successors) ok = ok || s.node == path[t + 1];
        if (!ok) throw ValidationError("path is not a chain of successors");
    }
    const std::size_t d = run.M.d;
    if (c.size() != run.M.q()) throw ValidationError("cost vector needs dim M entries");
    StrategyTrace out;
    out.path = path;
    out.cost.assign(c.begin(), c.end());
    Vec z = detail::coords(run, Z_from);
    Vec prev_full, prev_k;
    for (std::size_t t = from; t < path.size(); ++t) {
        const std::size_t id = path[t];
        const auto& ns = run.at(id);
        Step st;
        st.node = id;
        // Convex mode and vertex caps leave the set above its generators.
        if (!ns.inner.contains(z, 1e-9 * std::max(1.0, norm_inf(z)))) {
            double delta = 0.0;
            for (const auto& h : ns.inner.halfspaces)
                delta = std::max(delta, (h.offset - dot(h.normal, z)) / dot(h.normal, run.m));
            axpy(delta, run.m, z);
            st.shift = delta;
        }
        std::vector<Vec> images;
        for (const auto& s : ns.solutions) images.push_back(s.image);
        Weights w;
        try {
            w = choose_weights(z, images, ns.trade_directions, c);
        } catch (const InfeasibleError& e) {
            throw InfeasibleError(tr.label(id) + ": " + e.what());
        }
        st.Z = run.M.to_full(z);
        st.lambda = w.lambda;
        st.alpha = w.alpha;
        st.k.assign(d, 0.0);
        for (std::size_t i = 0; i < ns.solutions.size(); ++i) axpy(w.lambda[i], ns.solutions[i].k, st.k);
        for (std::size_t j = 0; j < ns.trade_directions.size(); ++j) axpy(w.alpha[j], ns.trade_directions[j], st.k);
        st.u = t == from ? st.Z : add(sub(st.Z, prev_full), prev_k);
        const auto& succ = tr.node(id).successors;
        Vec z_next;
        for (std::size_t j = 0; j < succ.size(); ++j) {
            Vec zj(run.M.q(), 0.0);
            for (std::size_t i = 0; i < ns.solutions.size(); ++i) axpy(w.lambda[i], ns.solutions[i].Z[j], zj);
            st.Z_next.push_back(run.M.to_full(zj));
            if (t + 1 < path.size() && succ[j].node == path[t + 1]) z_next = zj;
        }
        prev_full = st.Z;
        prev_k = st.k;
        out.steps.push_back(std::move(st));
        z = std::move(z_next);
    }
    return out;
}

inline StrategyTrace forward_pass(const recursion::RunResult& run, const std::vector<std::size_t>& path,
                                  std::span<const double> Z0) {
    return forward_pass(run, path, Z0, default_cost(run.M.q()));
}

/// Node sequence from one branch index per step.
inline std::vector<std::size_t> path_from_choices(const tree::ScenarioTree& tr, const std::vector<std::size_t>& choices) {
    if (choices.size() != tr.steps()) throw ValidationError("--path needs one branch choice per step");
    std::vector<std::size_t> path{tr.root()};
    for (std::size_t c : choices) {
        const auto& succ = tr.node(path.back()).successors;
        if (c >= succ.size()) throw ValidationError("--path branch index out of range");
        path.push_back(succ[c].node);
    }
    return path;
}

inline std::vector<std::size_t> sample_path(const tree::ScenarioTree& tr, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> path{tr.root()};
    while (!tr.node(path.back()).successors.empty()) {
        const auto& succ = tr.node(path.back()).successors;
        std::uniform_real_distribution<double> U(0.0, 1.0);
        double r = U(rng), acc = 0.0;
        std::size_t pick = succ.size() - 1;
        for (std::size_t j = 0; j < succ.size(); ++j) {
            acc += succ[j].prob;
            if (r < acc) {
                pick = j;
                break;
            }
        }
        path.push_back(succ[pick].node);
    }
    return path;
}

/// exists k in the terminal trading set with X + Z - k >= 0.
inline bool terminal_superhedge(const recursion::RunResult& run, std::size_t node, std::span<const double> Z) {
    const auto& X = run.X.at(node);
    const std::size_t d = X.size();
    const auto* ms = run.market_at(node);
    lp::LinearProgram prog;
    for (std::size_t i = 0; i < d; ++i) prog.add_variable();
    const double tol = 1e-9 * std::max({1.0, norm_inf(X), norm_inf(Z)});
    for (std::size_t i = 0; i < d; ++i) prog.add({{i, 1.0}}, lp::Relation::LessEqual, X[i] + Z[i] + tol);
    if (ms) {
        if (ms->model == market::Model::convex)
            throw UnsupportedError("terminal_superhedge: convex solvency regions are not linear");
        vop::VectorProblem p;
        p.add_variables(d);
        ms->constrain(p, 0);
        for (const auto& r : p.rows) prog.add(r.row, r.rel, r.rhs);
    } else {
        for (std::size_t i = 0; i < d; ++i) prog.add({{i, 1.0}}, lp::Relation::Equal, 0.0);
    }
    return lp::solve(prog).status != lp::Status::Infeasible;
}

struct Violation {
    std::size_t time = 0;
    std::string check;
    std::string detail;
};

struct Report {
    std::vector<Violation> violations;
    std::size_t checks = 0;
    bool ok() const { return violations.empty(); }
    std::string summary() const {
        std::ostringstream s;
        s << checks << " checks, " << violations.size() << " violations";
        for (const auto& v : violations) s << "\n  t=" << v.time << " " << v.check << ": " << v.detail;
        return s.str();
    }
};

struct VerifyOptions {
    bool truncation = true;
    double tol = kSetTol;         // membership in node sets and risk measures
    double trade_tol = kFeasTol;  // k_t in the trading set
};

inline Report verify_trace(const recursion::RunResult& run, const StrategyTrace& trace, const VerifyOptions& opt = {}) {
    const auto& tr = *run.tree;
    Report rep;
    auto check = [&](bool ok, std::size_t t, const std::string& name, const std::string& detail = "") {
        ++rep.checks;
        if (!ok) rep.violations.push_back({t, name, detail});
    };
    const std::size_t T = trace.steps.size() - 1;
    const std::size_t t0 = trace.path.size() - trace.steps.size();
    for (std::size_t j = 0; j < trace.steps.size(); ++j) {
        const auto& st = trace.steps[j];
        const std::size_t t = t0 + j;
        const auto& ns = run.at(st.node);
        const double scale_ = std::max(1.0, norm_inf(st.Z));

        double sum = 0.0;
        bool nonneg = true;
        for (double l : st.lambda) {
            sum += l;
            nonneg = nonneg && l >= 0.0;
        }
        for (double a : st.alpha) nonneg = nonneg && a >= 0.0;
        check(nonneg && std::abs(sum - 1.0) <= 1e-9, t, "weights", "sum lambda = " + std::to_string(sum));

        if (j > 0) {
            const auto& pr = trace.steps[j - 1];
            Vec id = add(sub(st.Z, pr.Z), pr.k);
            check(norm_inf(sub(id, st.u)) <= 1e-12 * scale_, t, "injection identity");
        } else {
            check(norm_inf(sub(st.u, st.Z)) == 0.0, t, "injection identity");
        }

        Vec z = detail::coords(run, st.Z);
        check(ns.set.contains(z, opt.tol * scale_), t, "I1", "Z_t outside the node set");

        if (const auto* ms = run.market_at(st.node))
            check(ms->contains(st.k, opt.trade_tol), t, "trade", "k_t = " + to_string(st.k) + " outside the trading set");

        const auto& succ = tr.node(st.node).successors;
        if (!succ.empty()) {
            // 0 in R_{t,t+1}(-u_{t+1}) over every successor; the realized one may carry a shift.
            std::vector<Vec> Xs;
            Vec prob;
            double slack = 0.0;
            for (std::size_t s = 0; s < succ.size(); ++s) {
                Vec zn = st.Z_next[s];
                if (j + 1 < trace.steps.size() && succ[s].node == trace.steps[j + 1].node) {
                    zn = trace.steps[j + 1].Z;
                    slack = trace.steps[j + 1].shift;
                }
                Vec u = add(sub(zn, st.Z), st.k);
                Xs.push_back(scale(u, -1.0));
                prob.push_back(succ[s].prob);
            }
            Vec Y = run.M.to_full(scale(run.m, slack));
            check(risk::measure_contains(run.spec, Xs, prob, Y, opt.tol), t, "I3",
                  "injection at t+1 not acceptable, violation " +
                      geometry::format_number(risk::measure_violation(run.spec, Xs, prob, Y)) + ", shift " +
                      geometry::format_number(slack));
        } else {
            const auto& X = run.X.at(st.node);
            Vec net = sub(st.Z, st.k);
            Vec one{1.0};
            check(risk::measure_contains(run.spec, {X}, one, net, opt.tol), t, "terminal",
                  "Z_T - k_T not acceptable for X, violation " +
                      geometry::format_number(risk::measure_violation(run.spec, {X}, one, net)));
            const auto* ms = run.market_at(st.node);
            if (run.spec.kind == risk::Kind::worst_case && (!ms || ms->model == market::Model::cone))
                check(terminal_superhedge(run, st.node, st.Z), t, "superhedge", "no solvent final trade");
        }
    }

    // Z_T = Z_0 + sum_{t>=1} u_t - sum_{t<T} k_t
    Vec tele = trace.steps.front().Z;
    for (std::size_t j = 1; j < trace.steps.size(); ++j) tele = sub(add(tele, trace.steps[j].u), trace.steps[j - 1].k);
    check(norm_inf(sub(tele, trace.steps.back().Z)) <= 1e-9 * std::max(1.0, norm_inf(tele)), T + t0, "telescoping");

    if (opt.truncation) {
        for (std::size_t j = 1; j < trace.steps.size(); ++j) {
            const std::size_t t = t0 + j;
            try {
                auto rest = forward_pass(run, trace.path, trace.steps[j].Z, trace.cost, t);
                VerifyOptions inner = opt;
                inner.truncation = false;
                auto r = verify_trace(run, rest, inner);
                check(r.ok(), t, "truncation", r.summary());
            } catch (const Error& e) {
                check(false, t, "truncation", e.what());
            }
        }
    }
    return rep;
}

/// time,node,Z...,u...,k...,lambda_count
inline std::string trace_csv(const recursion::RunResult& run, const StrategyTrace& trace) {
    const std::size_t d = run.M.d;
    std::ostringstream s;
    s << "time,node";
    for (const char* p : {"Z", "u", "k"})
        for (std::size_t i = 0; i < d; ++i) s << "," << p << i;
    s << ",lambda_count\n";
    const std::size_t t0 = trace.path.size() - trace.steps.size();
    for (std::size_t j = 0; j < trace.steps.size(); ++j) {
        const auto& st = trace.steps[j];
        s << t0 + j << "," << run.tree->label(st.node);
        for (const Vec* v : {&st.Z, &st.u, &st.k})
            for (double x : *v) s << "," << geometry::format_number(x);
        std::size_t used = 0;
        for (double l : st.lambda) used += l > 1e-12;
        s << "," << used << "\n";
    }
    return s.str();
}

}  // namespace setrisk::strategy
