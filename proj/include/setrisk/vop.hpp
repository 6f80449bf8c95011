#pragma once

// Vector optimization: min P x + offset w.r.t. an ordering cone C subject to
// linear rows and smooth convex constraints g(x) <= 0.
//
// Both solvers refine an inner approximation conv{y^i} + C. Every facet
// (a, b) of the current inner set is tested with the weighted-sum
// scalarization min a . y; a strictly better point is added, otherwise the
// facet is confirmed. Linear solves are exact. Convex solves carry a lower
// bound for each scalarization, and the intersection of the resulting
// supporting halfspaces is the reported outer set.

#include <functional>
#include <optional>

#include "setrisk/geometry.hpp"
#include "setrisk/lp.hpp"

namespace setrisk::vop {

/// Smooth convex function with gradient; value must be finite everywhere.
struct ConvexFunction {
    std::function<double(std::span<const double>)> value;
    std::function<void(std::span<const double>, std::span<double>)> gradient;
};

/// coef * exp(form . x + shift), coef >= 0.
struct ExpTerm {
    double coef = 0.0;
    SparseVec form;
    double shift = 0.0;
};

inline constexpr double kMaxExponent = 600.0;

/// constant + linear . x + sum_k coef_k exp(form_k . x + shift_k)
inline ConvexFunction exp_sum(double constant, SparseVec linear, std::vector<ExpTerm> terms) {
    for (const auto& t : terms)
        if (t.coef < 0) throw ValidationError("exp_sum: negative coefficient breaks convexity");
    auto lin = std::make_shared<SparseVec>(std::move(linear));
    auto ts = std::make_shared<std::vector<ExpTerm>>(std::move(terms));
    ConvexFunction f;
    f.value = [=](std::span<const double> x) {
        double v = constant + dot(*lin, x);
        for (const auto& t : *ts) v += t.coef * std::exp(std::min(dot(t.form, x) + t.shift, kMaxExponent));
        return v;
    };
    f.gradient = [=](std::span<const double> x, std::span<double> g) {
        std::fill(g.begin(), g.end(), 0.0);
        for (auto [j, v] : *lin) g[j] += v;
        for (const auto& t : *ts) {
            double e = t.coef * std::exp(std::min(dot(t.form, x) + t.shift, kMaxExponent));
            for (auto [j, v] : t.form) g[j] += e * v;
        }
    };
    return f;
}

/// constant + sum_k (form_k . x + shift_k)^2
inline ConvexFunction sum_of_squares(double constant, std::vector<std::pair<SparseVec, double>> forms) {
    auto fs = std::make_shared<std::vector<std::pair<SparseVec, double>>>(std::move(forms));
    ConvexFunction f;
    f.value = [=](std::span<const double> x) {
        double v = constant;
        for (const auto& [a, s] : *fs) {
            double r = dot(a, x) + s;
            v += r * r;
        }
        return v;
    };
    f.gradient = [=](std::span<const double> x, std::span<double> g) {
        std::fill(g.begin(), g.end(), 0.0);
        for (const auto& [a, s] : *fs) {
            double r = dot(a, x) + s;
            for (auto [j, v] : a) g[j] += 2 * r * v;
        }
    };
    return f;
}

struct VectorProblem {
    std::size_t num_vars = 0;
    std::vector<lp::Constraint> rows;
    std::vector<ConvexFunction> convex;  // g_k(x) <= 0
    std::vector<SparseVec> objective;    // image row i: objective[i] . x + offset[i]
    Vec offset;
    geometry::OrderingCone cone;
    Vec m;  // interior direction of the cone; empty selects the cone default

    std::size_t image_dim() const { return objective.size(); }

    std::size_t add_variables(std::size_t k) {
        std::size_t first = num_vars;
        num_vars += k;
        return first;
    }
    void add_row(SparseVec row, lp::Relation rel, double rhs) {
        rows.push_back({std::move(row), rel, rhs});
    }

    Vec image(std::span<const double> x) const {
        Vec y(objective.size());
        for (std::size_t i = 0; i < y.size(); ++i)
            y[i] = dot(objective[i], x) + (offset.empty() ? 0.0 : offset[i]);
        return y;
    }

    Vec interior_direction() const { return m.empty() ? cone.interior_direction() : m; }
};

/// Dense linear instance: min P x subject to B x >= b.
struct LinearVOP {
    Mat P;
    Mat B;
    Vec b;
    geometry::OrderingCone cone;

    VectorProblem to_problem() const {
        VectorProblem p;
        p.num_vars = P.empty() ? 0 : P.front().size();
        for (const auto& row : P) p.objective.push_back(sparse(row));
        p.offset.assign(P.size(), 0.0);
        for (std::size_t i = 0; i < B.size(); ++i) p.add_row(sparse(B[i]), lp::Relation::GreaterEqual, b[i]);
        p.cone = cone;
        return p;
    }
};

struct SolutionPoint {
    Vec x;
    Vec y;
};

struct Solution {
    std::vector<SolutionPoint> points;  // images generate the inner set
    std::vector<Vec> directions;
    geometry::Polyhedron upper_image;   // outer set in convex mode
    geometry::Polyhedron inner;
    double epsilon = 0.0;               // guaranteed bound (requested value when converged)
    double achieved_epsilon = 0.0;      // smallest t with upper_image + t m inside inner
    bool converged = true;
    std::size_t scalar_solves = 0;
};

struct Options {
    double epsilon = 0.0;
    /// Optional componentwise cap on the image (convex mode): rows P x + offset <= window.
    std::optional<Vec> window;
    std::size_t max_rounds = 200;
    std::size_t max_points = 20000;
    std::size_t max_cut_iterations = 2000;
};

namespace detail {

struct ScalarResult {
    Vec x;
    double upper = 0.0;  // value at x (feasible)
    double lower = 0.0;  // certified lower bound
};

inline lp::LinearProgram base_program(const VectorProblem& p, const std::optional<Vec>& window) {
    lp::LinearProgram prog;
    prog.num_vars = p.num_vars;
    prog.objective.assign(p.num_vars, 0.0);
    prog.constraints = p.rows;
    if (window) {
        for (std::size_t i = 0; i < p.objective.size(); ++i) {
            double off = p.offset.empty() ? 0.0 : p.offset[i];
            prog.add(p.objective[i], lp::Relation::LessEqual, (*window)[i] - off);
        }
    }
    return prog;
}

/// Weighted-sum oracle for purely linear problems; warm-started across calls.
class LinearOracle {
public:
    LinearOracle(const VectorProblem& p, const std::optional<Vec>& window)
        : p_(p), window_(window), solver_(base_program(p, window)) {}

    ScalarResult solve(std::span<const double> w, double /*tol*/) {
        Vec c(p_.num_vars, 0.0);
        double off = 0.0;
        for (std::size_t i = 0; i < p_.objective.size(); ++i) {
            for (auto [j, v] : p_.objective[i]) c[j] += w[i] * v;
            if (!p_.offset.empty()) off += w[i] * p_.offset[i];
        }
        solver_.set_objective(c);
        auto r = first_ ? solver_.solve() : solver_.resolve();
        if (r.status == lp::Status::NumericFailure) r = lp::Solver(base_with(c)).solve();
        first_ = false;
        check(r, w);
        return {r.x, r.value + off, r.value + off};
    }

private:
    lp::LinearProgram base_with(const Vec& c) const {
        auto prog = base_program(p_, window_);
        prog.objective = c;
        return prog;
    }
    static void check(const lp::Result& r, std::span<const double> w) {
        switch (r.status) {
            case lp::Status::Optimal: return;
            case lp::Status::Infeasible: throw InfeasibleError("vector problem infeasible");
            case lp::Status::Unbounded:
                throw DegenerateError("upper image recedes outside the ordering cone along weight " +
                                      to_string(w));
            case lp::Status::NumericFailure: {
                NumericFailure e("scalarization failed for weight " + to_string(w));
                e.direction.assign(w.begin(), w.end());
                throw e;
            }
        }
    }

    const VectorProblem& p_;
    std::optional<Vec> window_;
    lp::Solver solver_;
    bool first_ = true;
};

/// Cutting-plane oracle for problems with smooth convex constraints. An
/// interior point is found first; each scalarization then alternates LP
/// solves over the accumulated cuts (lower bound) with bisection towards
/// the interior point (feasible upper bound).
class ConvexOracle {
public:
    ConvexOracle(const VectorProblem& p, const std::optional<Vec>& window, std::size_t max_iter)
        : p_(p), base_(base_program(p, window)), n_(p.num_vars), max_iter_(max_iter) {
        find_interior();
    }

    ScalarResult solve(std::span<const double> w, double tol) {
        Vec c(n_, 0.0);
        double off = 0.0;
        for (std::size_t i = 0; i < p_.objective.size(); ++i) {
            for (auto [j, v] : p_.objective[i]) c[j] += w[i] * v;
            if (!p_.offset.empty()) off += w[i] * p_.offset[i];
        }
        ScalarResult best{center_, dot(c, center_), -lp::kInf};
        double radius = radius_;
        Vec anchor = center_;
        for (std::size_t it = 0;; ++it) {
            if (it == max_iter_) {
                NumericFailure e("convex scalarization did not converge for weight " + to_string(w));
                e.direction.assign(w.begin(), w.end());
                throw e;
            }
            auto r = lp_solve(c, radius, anchor);
            if (r.status != lp::Status::Optimal) fail(w, r.status);
            const Vec& x = r.x;
            bool on_box = false;
            for (std::size_t j = 0; j < n_; ++j)
                if (std::abs(x[j] - center_[j]) >= radius * (1 - 1e-9)) on_box = true;
            double gmax = max_violation(x);
            if (gmax <= 1e-10 * scale_) {
                if (r.value < best.upper) {
                    best.upper = r.value;
                    best.x = x;
                }
                if (!on_box) {
                    best.lower = r.value;
                    break;
                }
                // A feasible point on the box: the box may be cutting off the optimum.
                radius *= 100.0;
                if (radius > 1e13) fail(w, lp::Status::Unbounded);
                radius_ = std::max(radius_, radius);
                continue;
            }
            add_cuts(x, true);
            Vec xb = boundary_point(x);
            add_cuts(xb, false);
            anchor = xb;
            double vb = dot(c, xb);
            if (vb < best.upper) {
                best.upper = vb;
                best.x = xb;
            }
            if (!on_box) {
                best.lower = r.value;
                if (best.upper - best.lower <= tol) break;
            }
        }
        best.upper += off;
        best.lower += off;
        return best;
    }

private:
    [[noreturn]] static void fail(std::span<const double> w, lp::Status s) {
        if (s == lp::Status::Infeasible) throw InfeasibleError("convex vector problem infeasible");
        NumericFailure e(std::string("convex scalarization ") + lp::to_string(s) + " for weight " +
                         to_string(w));
        e.direction.assign(w.begin(), w.end());
        throw e;
    }

    double max_violation(std::span<const double> x) const {
        double g = -lp::kInf;
        for (const auto& f : p_.convex) g = std::max(g, f.value(x));
        return g;
    }

    /// Warm-started over the accumulated cuts: from the last vertex when no
    /// cut has been added since, otherwise from the feasible anchor.
    lp::Result lp_solve(const Vec& c, double radius, std::span<const double> anchor) {
        if (!solver_ || solver_radius_ != radius) {
            lp::LinearProgram prog = base_;
            prog.objective = c;
            prog.lower.resize(n_);
            prog.upper.resize(n_);
            for (std::size_t j = 0; j < n_; ++j) {
                prog.lower[j] = center_[j] - radius;
                prog.upper[j] = center_[j] + radius;
            }
            for (const auto& cut : cuts_) prog.constraints.push_back(cut);
            solver_.emplace(prog);
            solver_radius_ = radius;
            return solver_->solve();
        }
        solver_->set_objective(c);
        auto r = solver_->resolve_or_start(anchor);
        if (r.status == lp::Status::NumericFailure) {
            solver_.reset();
            return lp_solve(c, radius, anchor);
        }
        return r;
    }

    /// Linearizations of the constraints at x that are active or violated.
    void add_cuts(std::span<const double> x, bool violated_only) {
        Vec grad(n_);
        for (const auto& f : p_.convex) {
            double g = f.value(x);
            if (violated_only ? g <= 1e-12 * scale_ : g < -1e-6 * scale_) continue;
            f.gradient(x, grad);
            // g(x) + grad . (z - x) <= 0
            double rhs = dot(grad, x) - g;
            SparseVec row = sparse(grad);
            if (row.empty()) continue;
            if (solver_) solver_->add_constraint(row, lp::Relation::LessEqual, rhs);
            cuts_.push_back({std::move(row), lp::Relation::LessEqual, rhs});
        }
    }

    Vec boundary_point(std::span<const double> x) const {
        double lo = 0.0, hi = 1.0;
        Vec z(n_);
        auto at = [&](double t) {
            for (std::size_t j = 0; j < n_; ++j) z[j] = center_[j] + t * (x[j] - center_[j]);
            return max_violation(z);
        };
        for (int k = 0; k < 60 && hi - lo > 1e-14; ++k) {
            double mid = 0.5 * (lo + hi);
            if (at(mid) <= 0.0)
                lo = mid;
            else
                hi = mid;
        }
        at(lo);
        return z;
    }

    /// Kelley's method on min s s.t. g_k(x) <= s, stopped at a point with
    /// max_k g_k at most half of the certified optimum.
    void find_interior() {
        center_.assign(n_, 0.0);
        if (p_.convex.empty()) {
            radius_ = 1e9;
            return;
        }
        const double box = 1e7;
        std::vector<lp::Constraint> cuts;
        Vec grad(n_);
        Vec x(n_, 0.0);
        double best_g = lp::kInf;
        Vec best_x;
        for (std::size_t it = 0; it < max_iter_; ++it) {
            lp::LinearProgram prog = base_;
            std::size_t s = prog.add_variable(-1.0, lp::kInf, 1.0);
            prog.objective.assign(prog.num_vars, 0.0);
            prog.objective[s] = 1.0;
            for (std::size_t j = 0; j < n_; ++j) {
                prog.lower[j] = -box;
                prog.upper[j] = box;
            }
            for (const auto& c : cuts) prog.constraints.push_back(c);
            auto r = lp::solve(prog);
            if (r.status == lp::Status::Infeasible) throw InfeasibleError("vector problem infeasible");
            if (r.status != lp::Status::Optimal) throw NumericFailure("interior point search failed");
            x.assign(r.x.begin(), r.x.begin() + static_cast<std::ptrdiff_t>(n_));
            double lb = r.x[s];
            double gmax = -lp::kInf;
            for (const auto& f : p_.convex) gmax = std::max(gmax, f.value(x));
            if (gmax < best_g) {
                best_g = gmax;
                best_x = x;
            }
            if (lb >= 0.0) throw InfeasibleError("convex constraints have no interior point");
            if (best_g < 0.0 && (best_g <= 0.5 * lb || best_g - lb <= 1e-9 * (1 + std::abs(lb)))) break;
            for (const auto& f : p_.convex) {
                double g = f.value(x);
                f.gradient(x, grad);
                // g(x) + grad . (z - x) - s <= 0
                SparseVec row = sparse(grad);
                row.emplace_back(s, -1.0);
                cuts.push_back({std::move(row), lp::Relation::LessEqual, dot(grad, x) - g});
            }
            if (it + 1 == max_iter_ && best_g >= 0.0)
                throw NumericFailure("interior point search did not converge");
        }
        center_ = best_x;
        scale_ = std::max(1.0, std::abs(best_g));
        double cn = norm_inf(center_);
        radius_ = 1e4 * (1.0 + cn);
    }

    const VectorProblem& p_;
    lp::LinearProgram base_;
    std::size_t n_;
    std::size_t max_iter_;
    Vec center_;
    double radius_ = 1e9;
    double scale_ = 1.0;
    std::vector<lp::Constraint> cuts_;
    std::optional<lp::Solver> solver_;
    double solver_radius_ = 0.0;
};

/// Incremental inner approximation conv(points) + cone in H-form.
class InnerSet {
public:
    InnerSet(std::size_t q, const geometry::OrderingCone& cone, double sigma)
        : q_(q), sigma_(sigma), dd_(q + 1) {
        Vec row(q + 1, 0.0);
        for (const auto& g : cone.generators()) {
            std::copy(g.begin(), g.end(), row.begin() + 1);
            dd_.add(row);
        }
    }

    void add_point(std::span<const double> y) {
        Vec row(q_ + 1);
        row[0] = sigma_;
        std::copy(y.begin(), y.end(), row.begin() + 1);
        dd_.add(row);
    }

    std::vector<geometry::Halfspace> facets() const {
        std::vector<geometry::Halfspace> out;
        auto emit = [&](const Vec& r) {
            Vec a(r.begin() + 1, r.end());
            double n = norm2(a);
            if (n <= 1e-9) return;
            out.push_back({scale(a, 1.0 / n), -sigma_ * r[0] / n});
        };
        for (const auto& r : dd_.rays()) emit(r);
        for (const auto& l : dd_.lineality()) {
            emit(l);
            emit(scale(l, -1.0));
        }
        return out;
    }

private:
    std::size_t q_;
    double sigma_;
    setrisk::detail::ConeEnumerator dd_;
};

inline bool same_halfspace(const geometry::Halfspace& a, const geometry::Halfspace& b) {
    return geometry::detail::near(a.normal, b.normal, 1e-9) &&
           std::abs(a.offset - b.offset) <= 1e-9 * std::max(1.0, std::abs(a.offset));
}

/// Greedy nearest-normal order, so consecutive warm-started solves are close.
inline std::vector<geometry::Halfspace> chain_by_normal(std::vector<geometry::Halfspace> fs) {
    for (std::size_t i = 1; i < fs.size(); ++i) {
        std::size_t best = i;
        double bd = -lp::kInf;
        for (std::size_t j = i; j < fs.size(); ++j) {
            double d = dot(fs[i - 1].normal, fs[j].normal);
            if (d > bd) {
                bd = d;
                best = j;
            }
        }
        std::swap(fs[i], fs[best]);
    }
    return fs;
}

template <class Oracle>
Solution refine(const VectorProblem& p, Oracle& oracle, double eps, const Options& opt, bool exact) {
    const std::size_t q = p.image_dim();
    if (p.cone.dim() != q) throw ValidationError("ordering cone dimension differs from image dimension");
    const Vec m = p.interior_direction();
    Solution sol;
    std::vector<SolutionPoint> pts;
    std::vector<geometry::Halfspace> outer;

    auto scalar_tol = [&](std::span<const double> w) { return exact ? 0.0 : 0.1 * eps * dot(w, m); };
    auto run = [&](std::span<const double> w) {
        ++sol.scalar_solves;
        ScalarResult r = oracle.solve(w, scalar_tol(w));
        double n = norm2(w);
        outer.push_back({scale(w, 1.0 / n), r.lower / n});
        return r;
    };

    for (const auto& w : p.cone.dual_generators()) {
        auto r = run(w);
        pts.push_back({r.x, p.image(r.x)});
    }
    double sigma = 1.0;
    for (const auto& s : pts) sigma = std::max(sigma, norm_inf(s.y));
    InnerSet inner(q, p.cone, sigma);
    for (const auto& s : pts) inner.add_point(s.y);

    std::vector<geometry::Halfspace> confirmed;
    bool done = false;
    for (std::size_t round = 0; round < opt.max_rounds && !done; ++round) {
        done = true;
        auto facets = chain_by_normal(inner.facets());
        std::vector<SolutionPoint> fresh;
        for (const auto& f : facets) {
            bool known = false;
            for (const auto& c : confirmed) known = known || same_halfspace(c, f);
            if (known) continue;
            auto r = run(f.normal);
            double am = dot(f.normal, m);
            double gap = f.offset - r.lower;
            bool ok = exact ? r.upper >= f.offset - kFeasTol * std::max(sigma, std::abs(f.offset))
                            : gap <= eps * am;
            if (!ok) {
                // Round-off can return a point we already have; it confirms the facet.
                Vec y = p.image(r.x);
                for (const auto& s : pts) ok = ok || norm_inf(sub(s.y, y)) <= kFeasTol * sigma;
                for (const auto& s : fresh) ok = ok || norm_inf(sub(s.y, y)) <= kFeasTol * sigma;
            }
            if (ok) {
                confirmed.push_back(f);
            } else {
                done = false;
                fresh.push_back({r.x, p.image(r.x)});
            }
        }
        for (auto& s : fresh) {
            inner.add_point(s.y);
            pts.push_back(std::move(s));
        }
        if (pts.size() > opt.max_points) break;
    }
    sol.converged = done;

    std::vector<Vec> images;
    for (const auto& s : pts) images.push_back(s.y);
    sol.inner = geometry::from_points(q, images, p.cone);
    if (exact) {
        sol.upper_image = sol.inner;
    } else {
        sol.upper_image = geometry::from_halfspaces(q, outer, p.cone);
    }
    for (const auto& v : sol.inner.vertices) {
        const SolutionPoint* best = nullptr;
        double bd = lp::kInf;
        for (const auto& s : pts) {
            double dd = norm_inf(sub(s.y, v));
            if (dd < bd) {
                bd = dd;
                best = &s;
            }
        }
        if (best) sol.points.push_back(*best);
    }
    sol.directions = sol.inner.directions;
    double achieved = 0.0;
    if (!exact) {
        for (const auto& v : sol.upper_image.vertices)
            for (const auto& h : sol.inner.halfspaces)
                achieved = std::max(achieved, (h.offset - dot(h.normal, v)) / dot(h.normal, m));
    }
    sol.achieved_epsilon = achieved;
    sol.epsilon = exact ? 0.0 : (done ? eps : achieved);
    return sol;
}

}  // namespace detail

inline Solution solve_linear(const VectorProblem& p, const Options& opt = {}) {
    if (!p.convex.empty()) throw ValidationError("solve_linear: problem has convex constraints");
    detail::LinearOracle oracle(p, opt.window);
    return detail::refine(p, oracle, 0.0, opt, true);
}

inline Solution solve_linear(const LinearVOP& p) { return solve_linear(p.to_problem()); }

inline Solution solve_convex(const VectorProblem& p, double epsilon, const Options& opt = {}) {
    if (!(epsilon > 0)) throw ValidationError("solve_convex: epsilon must be positive");
    if (p.convex.empty()) {
        detail::LinearOracle oracle(p, opt.window);
        return detail::refine(p, oracle, epsilon, opt, false);
    }
    detail::ConvexOracle oracle(p, opt.window, opt.max_cut_iterations);
    return detail::refine(p, oracle, epsilon, opt, false);
}

inline std::string to_json(const Solution& s) {
    std::string j = geometry::to_json(s.upper_image);
    j.pop_back();
    j += ",\"inner\":" + geometry::to_json(s.inner);
    j += ",\"epsilon\":" + geometry::format_number(s.epsilon) + "}";
    return j;
}

}  // namespace setrisk::vop
