#pragma once

// Backward induction on the event tree: one VOP per node, children before
// parents, nodes of a time slice solved concurrently.

#include <atomic>
#include <exception>
#include <thread>

#include <nlohmann/json.hpp>

#include "setrisk/log.hpp"
#include "setrisk/riskmeasures.hpp"

namespace setrisk::recursion {

struct RunMode {
    bool convex = false;
    double epsilon = 0.0;          // per-step tolerance in convex mode
    std::optional<double> window;  // image cap per coordinate
    std::size_t vmax = 0;          // 0 keeps every vertex
    std::size_t jobs = 1;

    void validate() const {
        if (convex && !(epsilon > 0)) throw ValidationError("mode.epsilon must be positive in convex mode");
        if (window && !(*window > 0)) throw ValidationError("mode.window must be positive");
        if (vmax == 1) throw ValidationError("mode.vmax must be 0 or at least 2");
    }
};

/// One generator of the node set: image = Y + k, successor holdings Z.
struct NodeSolution {
    Vec image;
    Vec Y;
    std::vector<Vec> Z;  // per successor, in M coordinates
    Vec k;               // trade, zero without a trade variable
};

struct NodeRiskSet {
    std::size_t node = 0;
    geometry::Polyhedron set;    // outer approximation (exact in linear mode)
    geometry::Polyhedron inner;  // conv(solution images) + cone
    std::vector<NodeSolution> solutions;
    std::vector<Vec> trade_directions;
    double epsilon_step = 0.0;
    double epsilon_total = 0.0;
    std::size_t scalar_solves = 0;
    bool converged = true;
};

struct RunResult {
    const tree::ScenarioTree* tree = nullptr;
    risk::RiskMeasureSpec spec;
    risk::Eligible M;
    market::MarketSpec market;
    RunMode mode;
    Vec m;
    risk::Payoff X;
    std::vector<market::MarketSet> markets;  // per node when a market is active
    std::vector<NodeRiskSet> sets;           // per node

    const NodeRiskSet& at(std::size_t id) const { return sets.at(id); }
    const NodeRiskSet& root() const { return sets.at(tree->root()); }
    const market::MarketSet* market_at(std::size_t id) const {
        return markets.empty() ? nullptr : &markets.at(id);
    }
};

namespace detail {

/// Largest t with y + t m outside the halfspaces (<= 0 when y is inside).
inline double gap(const std::vector<geometry::Halfspace>& hs, const Vec& y, const Vec& m) {
    double t = -lp::kInf;
    for (const auto& h : hs) {
        double hm = dot(h.normal, m);
        if (hm > 1e-12) t = std::max(t, (h.offset - dot(h.normal, y)) / hm);
    }
    return t;
}

/// Farthest-point insertion down to vmax generators. The node keeps the
/// chosen solutions; the set becomes the reduced inner set shifted down by the
/// certified error, which is returned.
inline double simplify(NodeRiskSet& ns, std::size_t vmax, const Vec& m) {
    const std::size_t q = ns.set.dim;
    const auto& cone = ns.set.cone;
    const auto& sols = ns.solutions;
    const std::size_t n = sols.size();
    double sigma = 1.0;
    for (const auto& s : sols) sigma = std::max(sigma, norm_inf(s.image));
    vop::detail::InnerSet inner(q, cone, sigma);
    std::vector<char> chosen(n, 0);
    std::vector<std::size_t> pick;
    auto take = [&](std::size_t j) {
        chosen[j] = 1;
        pick.push_back(j);
        inner.add_point(sols[j].image);
    };
    for (const auto& w : cone.dual_generators()) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < n; ++j)
            if (dot(w, sols[j].image) < dot(w, sols[best].image) - 1e-12) best = j;
        if (!chosen[best] && pick.size() < vmax) take(best);
    }
    double err = 0.0;
    while (true) {
        auto hs = inner.facets();
        std::size_t far = n;
        err = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (chosen[j]) continue;
            double g = gap(hs, sols[j].image, m);
            if (g > err) {
                err = g;
                far = j;
            }
        }
        if (far == n || pick.size() >= vmax) break;
        take(far);
    }
    // Certify against the set itself; in convex mode its vertices are not solutions.
    auto hs = inner.facets();
    err = 0.0;
    for (const auto& v : ns.set.vertices) err = std::max(err, gap(hs, v, m));
    std::sort(pick.begin(), pick.end());
    std::vector<Vec> pts;
    for (std::size_t j : pick) pts.push_back(sols[j].image);
    ns.inner = geometry::from_points(q, pts, cone, ns.inner.directions);
    std::vector<NodeSolution> kept;
    for (std::size_t j : pick)
        for (const auto& v : ns.inner.vertices)
            if (norm_inf(sub(sols[j].image, v)) <= 1e-9) {
                kept.push_back(sols[j]);
                break;
            }
    ns.solutions = std::move(kept);
    ns.set = geometry::translate(ns.inner, scale(m, -err));
    return err;
}

template <class E>
[[noreturn]] void rethrow_at(const E& e, const std::string& label) {
    throw E(label + ": " + e.what());
}

inline NodeRiskSet solve_node(const RunResult& run, std::size_t id) {
    const auto& tr = *run.tree;
    const auto& nd = tr.node(id);
    const auto* ms = run.market_at(id);
    risk::NodeProblem np;
    if (nd.successors.empty()) {
        auto it = run.X.find(id);
        if (it == run.X.end()) throw ValidationError("payoff missing at terminal node");
        np = risk::terminal_problem(run.spec, run.M, it->second, ms, run.m);
    } else {
        std::vector<const geometry::Polyhedron*> kids;
        Vec prob;
        for (const auto& s : nd.successors) {
            kids.push_back(&run.sets.at(s.node).set);
            prob.push_back(s.prob);
        }
        np = risk::onestep_problem(run.spec, run.M, prob, kids, ms, run.m);
    }
    vop::Options opt;
    if (run.mode.window) opt.window = Vec(run.M.q(), *run.mode.window);
    vop::Solution sol = run.mode.convex ? vop::solve_convex(np.vp, run.mode.epsilon, opt) : vop::solve_linear(np.vp, opt);
    if (!sol.converged)
        log::warn(tr.label(id) + ": refinement stopped early, achieved epsilon " + std::to_string(sol.epsilon));

    NodeRiskSet ns;
    ns.node = id;
    ns.set = std::move(sol.upper_image);
    ns.inner = std::move(sol.inner);
    ns.epsilon_step = sol.epsilon;
    ns.scalar_solves = sol.scalar_solves;
    ns.converged = sol.converged;
    const std::size_t q = run.M.q();
    for (const auto& pt : sol.points) {
        NodeSolution s;
        s.image = pt.y;
        s.Y = np.Y(pt.x, q);
        for (std::size_t j = 0; j < np.z_first.size(); ++j) s.Z.push_back(np.Z(pt.x, j, q));
        s.k = np.k(pt.x, run.M.d);
        ns.solutions.push_back(std::move(s));
    }
    if (ms) ns.trade_directions = ms->trade_directions;
    if (run.mode.vmax >= 2 && ns.solutions.size() > run.mode.vmax) ns.epsilon_step += simplify(ns, run.mode.vmax, run.m);
    double child = 0.0;
    for (const auto& s : nd.successors) child = std::max(child, run.sets.at(s.node).epsilon_total);
    ns.epsilon_total = child + ns.epsilon_step;
    return ns;
}

inline NodeRiskSet solve_node_labeled(const RunResult& run, std::size_t id) {
    const std::string label = run.tree->label(id);
    try {
        return solve_node(run, id);
    } catch (const InfeasibleError& e) {
        rethrow_at(e, label);
    } catch (const DegenerateError& e) {
        rethrow_at(e, label);
    } catch (const NumericFailure& e) {
        NumericFailure f(label + ": " + e.what());
        f.direction = e.direction;
        throw f;
    } catch (const ModelError& e) {
        rethrow_at(e, label);
    } catch (const ValidationError& e) {
        rethrow_at(e, label);
    }
}

/// Runs f(i) for i in [0, n) on up to `jobs` threads; rethrows the failure of the smallest index.
template <class F>
void parallel_for(std::size_t n, std::size_t jobs, F&& f) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                f(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

/// R_t(X) at every node; with an active market the composed market extension.
inline RunResult backward_induct(const tree::ScenarioTree& tr, const risk::RiskMeasureSpec& spec, const risk::Payoff& X,
                                 const market::MarketSpec& market, const RunMode& mode) {
    const std::size_t d = tr.params.d;
    spec.validate(d);
    mode.validate();
    if (spec.convex() && !mode.convex) throw ValidationError("the entropic measure needs convex mode");
    if (market.model == market::Model::convex && !mode.convex)
        throw ValidationError("the convex solvency region needs convex mode");
    for (std::size_t id : tr.slices.back())
        if (!X.contains(id) || X.at(id).size() != d) throw ValidationError("payoff must give a d-vector at every terminal node");

    RunResult run;
    run.tree = &tr;
    run.spec = spec;
    run.M = risk::eligible(spec, d);
    run.market = market;
    run.mode = mode;
    run.m = run.M.cone.interior_direction();
    run.X = X;
    if (market.active()) {
        if (!run.M.full()) throw ValidationError("market runs need M = R^d");
        run.markets.reserve(tr.nodes.size());
        for (const auto& nd : tr.nodes) run.markets.push_back(market::market_set(nd, market));
    }
    run.sets.resize(tr.nodes.size());
    for (std::size_t t = tr.slices.size(); t-- > 0;) {
        const auto& slice = tr.slices[t];
        detail::parallel_for(slice.size(), mode.jobs, [&](std::size_t i) {
            run.sets[slice[i]] = detail::solve_node_labeled(run, slice[i]);
        });
        double eps = 0.0;
        std::size_t verts = 0;
        for (std::size_t id : slice) {
            eps = std::max(eps, run.sets[id].epsilon_total);
            verts = std::max(verts, run.sets[id].set.vertices.size());
        }
        log::debug("t=" + std::to_string(t) + ": " + std::to_string(slice.size()) + " nodes, max vertices " +
                   std::to_string(verts) + ", epsilon_total " + std::to_string(eps));
    }
    return run;
}

/// Whole-run dump: node id -> set, inner set, solutions and error bounds.
inline nlohmann::json to_json(const RunResult& run) {
    using nlohmann::json;
    json nodes = json::object();
    for (const auto& ns : run.sets) {
        json sols = json::array();
        for (const auto& s : ns.solutions) sols.push_back({{"image", s.image}, {"Y", s.Y}, {"Z", s.Z}, {"k", s.k}});
        nodes[std::to_string(ns.node)] = {
            {"label", run.tree->label(ns.node)},
            {"time", run.tree->node(ns.node).time},
            {"set", json::parse(geometry::to_json(ns.set))},
            {"inner", json::parse(geometry::to_json(ns.inner))},
            {"solutions", sols},
            {"trade_directions", ns.trade_directions},
            {"epsilon_step", ns.epsilon_step},
            {"epsilon_total", ns.epsilon_total},
        };
    }
    json basis = run.M.basis;
    return {{"risk", risk::to_string(run.spec.kind)},
            {"market", market::to_string(run.market.model)},
            {"mode", run.mode.convex ? "convex" : "linear"},
            {"M_basis", basis},
            {"m", run.m},
            {"nodes", nodes}};
}

}  // namespace setrisk::recursion
