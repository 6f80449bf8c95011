#pragma once

// Dense active-set primal simplex on the inequality form. A vertex is
// described by a working set of n linearly independent active rows; the
// inverse of the working matrix is updated by rank-one column operations.
// Free variables are handled with artificial rows e_k . x = x_k that are
// dropped once priced out.

#include <Eigen/Dense>
#include <limits>

#include "setrisk/common.hpp"

namespace setrisk::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation { GreaterEqual, LessEqual, Equal };
enum class Status { Optimal, Infeasible, Unbounded, NumericFailure };

inline const char* to_string(Status s) {
    switch (s) {
        case Status::Optimal: return "optimal";
        case Status::Infeasible: return "infeasible";
        case Status::Unbounded: return "unbounded";
        case Status::NumericFailure: return "numeric-failure";
    }
    return "?";
}

struct Constraint {
    SparseVec row;
    Relation rel = Relation::GreaterEqual;
    double rhs = 0.0;
};

struct LinearProgram {
    std::size_t num_vars = 0;
    Vec objective;
    std::vector<Constraint> constraints;
    Vec lower;  // empty means all free
    Vec upper;

    std::size_t add_variable(double lo = -kInf, double hi = kInf, double cost = 0.0) {
        lower.resize(num_vars, -kInf);
        upper.resize(num_vars, kInf);
        objective.resize(num_vars, 0.0);
        lower.push_back(lo);
        upper.push_back(hi);
        objective.push_back(cost);
        return num_vars++;
    }

    void add(SparseVec row, Relation rel, double rhs) {
        constraints.push_back({std::move(row), rel, rhs});
    }
};

struct Result {
    Status status = Status::NumericFailure;
    Vec x;
    double value = 0.0;
    /// One multiplier per constraint: >= 0 for >= rows, <= 0 for <= rows, free
    /// for = rows, with c = sum duals_i a_i + sum bound_duals_k e_k.
    Vec duals;
    Vec bound_duals;
    std::size_t iterations = 0;

    bool optimal() const { return status == Status::Optimal; }
};

class Solver {
public:
    explicit Solver(const LinearProgram& lp) : n_(lp.num_vars), m_orig_(lp.constraints.size()) {
        c_ = lp.objective;
        c_.resize(n_, 0.0);
        for (std::size_t i = 0; i < lp.constraints.size(); ++i) {
            const auto& con = lp.constraints[i];
            double sign = con.rel == Relation::LessEqual ? -1.0 : 1.0;
            add_row(con.row, sign, con.rhs, con.rel == Relation::Equal, Origin::Constraint, i);
        }
        for (std::size_t k = 0; k < n_; ++k) {
            if (k < lp.lower.size() && lp.lower[k] > -kInf)
                add_row({{k, 1.0}}, 1.0, lp.lower[k], false, Origin::Lower, k);
            if (k < lp.upper.size() && lp.upper[k] < kInf)
                add_row({{k, 1.0}}, -1.0, lp.upper[k], false, Origin::Upper, k);
        }
    }

    Result solve() {
        iterations_ = 0;
        if (trivially_infeasible_) return finish(Status::Infeasible);
        if (n_ == 0) return finish(Status::Optimal);
        Status s = phase_one();
        if (s != Status::Optimal) return finish(s);
        s = run(c_);
        warm_ = basis_valid_ = s == Status::Optimal;
        return finish(s);
    }

    /// Replaces the objective; resolve() then starts from the last optimal vertex.
    void set_objective(std::span<const double> c) { c_.assign(c.begin(), c.end()); }

    Result resolve() {
        if (!warm_) return solve();
        iterations_ = 0;
        Status s = run(c_);
        warm_ = basis_valid_ = s == Status::Optimal;
        return finish(s);
    }

    /// Warm vertex if still feasible, else dual steps from the last optimal
    /// basis, else a fresh start at the feasible point x0.
    Result resolve_or_start(std::span<const double> x0) {
        if (warm_) return resolve();
        if (basis_valid_) {
            iterations_ = 0;
            basis_valid_ = false;
            if (restore(eng_, c_, iterations_, 20 * n_ + 100)) {
                Status s = iterate(eng_, c_, iterations_, max_iterations());
                if (s == Status::Optimal) {
                    warm_ = basis_valid_ = true;
                    return finish(s);
                }
            }
        }
        return solve_from(x0);
    }

    /// Appends a constraint. The last vertex stays warm only if it satisfies the row.
    void add_constraint(const SparseVec& row, Relation rel, double rhs) {
        double sign = rel == Relation::LessEqual ? -1.0 : 1.0;
        std::size_t before = rows_.size();
        add_row(row, sign, rhs, rel == Relation::Equal, Origin::Constraint, m_orig_++);
        if (rows_.size() == before || !basis_valid_) return;
        const Row& r = rows_.back();
        eng_.pos.push_back(-1);
        eng_.res.push_back(dot(r.a, eng_.x) - r.b);
        if (eng_.res.back() < -kFeasTol || (r.eq && std::abs(eng_.res.back()) > kFeasTol)) warm_ = false;
    }

    /// Primal simplex started at a feasible point x0 that need not be a vertex.
    /// Falls back to solve() when x0 violates a row.
    Result solve_from(std::span<const double> x0) {
        iterations_ = 0;
        if (trivially_infeasible_) return finish(Status::Infeasible);
        if (n_ == 0 || x0.size() != n_) return solve();
        for (const auto& r : rows_) {
            double res = dot(r.a, x0) - r.b;
            if (res < -kFeasTol || (r.eq && std::abs(res) > kFeasTol)) return solve();
        }
        std::vector<long> w(n_);
        for (std::size_t k = 0; k < n_; ++k) w[k] = -static_cast<long>(k) - 1;
        Vec x(x0.begin(), x0.end());
        eng_.init(n_, rows_, std::move(w), x, x);
        if (!eng_.refactor()) return solve();
        Status s = iterate(eng_, c_, iterations_, max_iterations());
        warm_ = basis_valid_ = s == Status::Optimal;
        if (s == Status::NumericFailure) return solve();
        return finish(s);
    }

private:
    enum class Origin { Constraint, Lower, Upper };
    struct Row {
        SparseVec a;
        double b;
        bool eq;
        Origin origin;
        std::size_t index;
        double factor;  // original multiplier = factor * internal multiplier
    };

    void add_row(const SparseVec& row, double sign, double rhs, bool eq, Origin o, std::size_t idx) {
        SparseVec a;
        double nrm = 0.0;
        for (auto [j, v] : row) {
            if (v == 0.0) continue;
            a.emplace_back(j, sign * v);
            nrm += v * v;
        }
        nrm = std::sqrt(nrm);
        double b = sign * rhs;
        if (nrm == 0.0) {
            if ((eq && std::abs(b) > kFeasTol) || (!eq && b > kFeasTol)) trivially_infeasible_ = true;
            return;
        }
        for (auto& [j, v] : a) v /= nrm;
        rows_.push_back({std::move(a), b / nrm, eq, o, idx, sign / nrm});
    }

    // ---- core engine over a row set -------------------------------------

    struct Engine {
        std::size_t n = 0;
        const std::vector<Row>* rows = nullptr;
        std::vector<long> work;  // row index, or -(k+1) for artificial on variable k
        Vec art_rhs;
        Vec inv;  // column-major, column j solves A_W b_j = e_j
        Vec x;
        Vec res;  // a_i . x - b_i
        std::vector<long> pos;  // position in work per row, -1 if inactive
        std::size_t updates = 0;

        const SparseVec* row_of(long w, SparseVec& tmp) const {
            if (w >= 0) return &(*rows)[static_cast<std::size_t>(w)].a;
            tmp.assign(1, {static_cast<std::size_t>(-w - 1), 1.0});
            return &tmp;
        }
        double rhs_of(long w) const {
            return w >= 0 ? (*rows)[static_cast<std::size_t>(w)].b
                          : art_rhs[static_cast<std::size_t>(-w - 1)];
        }

        Eigen::MatrixXd working_matrix() const {
            Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                      static_cast<Eigen::Index>(n));
            SparseVec tmp;
            for (std::size_t j = 0; j < n; ++j)
                for (auto [k, v] : *row_of(work[j], tmp))
                    A(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = v;
            return A;
        }

        /// Swaps dependent working rows for artificial rows pinning variables at x.
        void repair() {
            std::vector<Vec> basis;
            std::vector<long> keep;
            auto try_add = [&](long w) {
                Vec v(n, 0.0);
                SparseVec tmp;
                for (auto [k, val] : *row_of(w, tmp)) v[k] = val;
                for (const auto& o : basis) axpy(-dot(v, o), o, v);
                double nv = norm2(v);
                if (nv < 1e-7) return;
                basis.push_back(scale(v, 1.0 / nv));
                keep.push_back(w);
            };
            for (long w : work) try_add(w);
            for (std::size_t k = 0; k < n && keep.size() < n; ++k) {
                long a = -static_cast<long>(k) - 1;
                if (std::find(keep.begin(), keep.end(), a) != keep.end()) continue;
                std::size_t before = keep.size();
                try_add(a);
                if (keep.size() > before) art_rhs[k] = x[k];
            }
            for (long w : work)
                if (w >= 0 && std::find(keep.begin(), keep.end(), w) == keep.end()) pos[static_cast<std::size_t>(w)] = -1;
            work = std::move(keep);
            for (std::size_t j = 0; j < n; ++j)
                if (work[j] >= 0) pos[static_cast<std::size_t>(work[j])] = static_cast<long>(j);
        }

        bool refactor() {
            Eigen::MatrixXd A = working_matrix();
            // Partial pivoting is enough for well-conditioned bases; full
            // pivoting detects rank loss for the repair path.
            Eigen::PartialPivLU<Eigen::MatrixXd> plu(A);
            if (plu.rcond() > 1e-11) {
                Eigen::MatrixXd B = plu.inverse();
                if (B.allFinite()) return install(B);
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
            lu.setThreshold(1e-10);
            if (!lu.isInvertible()) {
                repair();
                if (work.size() != n) return false;
                A = working_matrix();
                lu.compute(A);
                if (!lu.isInvertible()) return false;
            }
            Eigen::MatrixXd B = lu.inverse();
            if (!B.allFinite()) return false;
            return install(B);
        }

        /// Stores B = A_W^{-1} and recomputes x = B rhs_W.
        bool install(const Eigen::MatrixXd& B) {
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t v = 0; v < n; ++v)
                    inv[j * n + v] = B(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(j));
            std::fill(x.begin(), x.end(), 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                double r = rhs_of(work[j]);
                if (r != 0.0) axpy(r, std::span<const double>(&inv[j * n], n), x);
            }
            recompute_residuals();
            updates = 0;
            return true;
        }

        void recompute_residuals() {
            res.resize(rows->size());
            for (std::size_t i = 0; i < rows->size(); ++i)
                res[i] = dot((*rows)[i].a, x) - (*rows)[i].b;
        }

        void init(std::size_t nvars, const std::vector<Row>& r, std::vector<long> w, Vec arts, Vec x0) {
            n = nvars;
            rows = &r;
            work = std::move(w);
            art_rhs = std::move(arts);
            x = std::move(x0);
            inv.assign(n * n, 0.0);
            pos.assign(r.size(), -1);
            for (std::size_t j = 0; j < n; ++j)
                if (work[j] >= 0) pos[static_cast<std::size_t>(work[j])] = static_cast<long>(j);
        }
    };

    static Status iterate(Engine& e, const Vec& c, std::size_t& iters, std::size_t max_iter) {
        const std::size_t n = e.n;
        const auto& rows = *e.rows;
        Vec lambda(n), p(n), ap(rows.size()), gamma(n);
        const double ctol = 1e-9 * std::max(1.0, norm_inf(c));
        std::size_t degenerate = 0;
        bool bland = false;
        SparseVec tmp;
        while (true) {
            if (iters++ >= max_iter) return Status::NumericFailure;
            if (e.updates >= 64 && !e.refactor()) return Status::NumericFailure;
            for (std::size_t j = 0; j < n; ++j) lambda[j] = dot(std::span(&e.inv[j * n], n), c);

            // Pricing: artificial rows first, then inequality rows.
            long k = -1;
            double best = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (e.work[j] >= 0) continue;
                double v = std::abs(lambda[j]);
                if (v > ctol && (bland ? k < 0 : v > best)) {
                    best = v;
                    k = static_cast<long>(j);
                }
            }
            if (k < 0) {
                long best_row = -1;
                for (std::size_t j = 0; j < n; ++j) {
                    long w = e.work[j];
                    if (w < 0 || rows[static_cast<std::size_t>(w)].eq) continue;
                    if (lambda[j] < -ctol) {
                        if (bland) {
                            if (best_row < 0 || w < best_row) {
                                best_row = w;
                                k = static_cast<long>(j);
                            }
                        } else if (lambda[j] < best) {
                            best = lambda[j];
                            k = static_cast<long>(j);
                        }
                    }
                }
            }
            if (k < 0) return Status::Optimal;

            const std::size_t kk = static_cast<std::size_t>(k);
            const double sigma = e.work[kk] < 0 ? (lambda[kk] > 0 ? -1.0 : 1.0) : 1.0;
            for (std::size_t v = 0; v < n; ++v) p[v] = sigma * e.inv[kk * n + v];
            const double ptol = 1e-11 * std::max(1.0, norm_inf(p));

            // Harris two-pass ratio test.
            const double htol = 1e-10;
            double amax = kInf;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (e.pos[i] >= 0) continue;
                ap[i] = dot(rows[i].a, p);
                double a = ap[i];
                if (rows[i].eq) {
                    if (std::abs(a) > ptol) amax = std::min(amax, (std::abs(e.res[i]) + htol) / std::abs(a));
                } else if (a < -ptol) {
                    amax = std::min(amax, (std::max(e.res[i], 0.0) + htol) / -a);
                }
            }
            if (amax == kInf) return Status::Unbounded;
            long r = -1;
            double rbest = -1.0, rratio = kInf;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (e.pos[i] >= 0) continue;
                double a = ap[i];
                double ratio;
                if (rows[i].eq) {
                    if (std::abs(a) <= ptol) continue;
                    ratio = std::abs(e.res[i]) / std::abs(a);
                } else {
                    if (a >= -ptol) continue;
                    ratio = std::max(e.res[i], 0.0) / -a;
                }
                if (bland) {
                    if (ratio < rratio - 1e-12 || (ratio <= rratio + 1e-12 && r < 0)) {
                        rratio = ratio;
                        r = static_cast<long>(i);
                    }
                } else if (ratio <= amax && std::abs(a) > rbest) {
                    rbest = std::abs(a);
                    rratio = ratio;
                    r = static_cast<long>(i);
                }
            }
            if (r < 0) return Status::NumericFailure;
            const std::size_t rr = static_cast<std::size_t>(r);
            double alpha = rratio;
            if (rows[rr].eq && ap[rr] * e.res[rr] > 0) alpha = 0.0;

            // Step.
            axpy(alpha, p, e.x);
            for (std::size_t i = 0; i < rows.size(); ++i)
                if (e.pos[i] < 0) e.res[i] += alpha * ap[i];
            long dropped = e.work[kk];
            if (dropped >= 0) {
                auto d = static_cast<std::size_t>(dropped);
                e.res[d] = dot(rows[d].a, e.x) - rows[d].b;
                e.pos[d] = -1;
            }
            if (rows[rr].eq) e.res[rr] = 0.0;

            // Basis update: row k of A_W becomes a_r.
            for (std::size_t j = 0; j < n; ++j) gamma[j] = dot(rows[rr].a, std::span(&e.inv[j * n], n));
            if (std::abs(gamma[kk]) < 1e-12) return Status::NumericFailure;
            double* bk = &e.inv[kk * n];
            for (std::size_t v = 0; v < n; ++v) bk[v] /= gamma[kk];
            for (std::size_t j = 0; j < n; ++j) {
                if (j == kk || gamma[j] == 0.0) continue;
                double* bj = &e.inv[j * n];
                for (std::size_t v = 0; v < n; ++v) bj[v] -= gamma[j] * bk[v];
            }
            e.work[kk] = r;
            e.pos[rr] = k;
            ++e.updates;

            if (alpha <= 1e-12) {
                if (++degenerate > 30) bland = true;
            } else {
                degenerate = 0;
                bland = false;
            }
        }
    }

    /// Dual simplex steps after rows were added to an optimal basis: the most
    /// violated row enters and the leaving row is picked by the ratio
    /// lambda_j / gamma_j. Stops once x is feasible; false if it stalls.
    static bool restore(Engine& e, const Vec& c, std::size_t& iters, std::size_t max_steps) {
        const std::size_t n = e.n;
        const auto& rows = *e.rows;
        Vec lambda(n), gamma(n), p(n);
        for (std::size_t step = 0; step < max_steps; ++step) {
            ++iters;
            if (e.updates >= 64 && !e.refactor()) return false;
            long r = -1;
            double worst = -kFeasTol;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (e.pos[i] >= 0) continue;
                double v = rows[i].eq ? -std::abs(e.res[i]) : e.res[i];
                if (v < worst) {
                    worst = v;
                    r = static_cast<long>(i);
                }
            }
            if (r < 0) return true;
            const auto rr = static_cast<std::size_t>(r);
            const double s = e.res[rr] < 0 ? 1.0 : -1.0;
            for (std::size_t j = 0; j < n; ++j) {
                std::span col(&e.inv[j * n], n);
                lambda[j] = dot(col, c);
                gamma[j] = dot(rows[rr].a, col);
            }
            long k = -1;
            double best = kInf, best_g = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                long w = e.work[j];
                double g = s * gamma[j], ratio;
                if (w < 0) {
                    if (std::abs(g) <= 1e-9) continue;
                    ratio = 0.0;
                    g = std::abs(g);
                } else {
                    if (rows[static_cast<std::size_t>(w)].eq || g <= 1e-9) continue;
                    ratio = std::max(lambda[j], 0.0) / g;
                }
                if (ratio < best - 1e-12 || (ratio <= best + 1e-12 && g > best_g)) {
                    best = ratio;
                    best_g = g;
                    k = static_cast<long>(j);
                }
            }
            if (k < 0) return false;
            const auto kk = static_cast<std::size_t>(k);
            const double sig = (e.work[kk] < 0 && s * gamma[kk] < 0) ? -1.0 : 1.0;
            for (std::size_t v = 0; v < n; ++v) p[v] = sig * e.inv[kk * n + v];
            const double alpha = -e.res[rr] / (sig * gamma[kk]);
            axpy(alpha, p, e.x);
            for (std::size_t i = 0; i < rows.size(); ++i)
                if (e.pos[i] < 0) e.res[i] += alpha * dot(rows[i].a, p);
            long dropped = e.work[kk];
            if (dropped >= 0) {
                auto d = static_cast<std::size_t>(dropped);
                e.res[d] = dot(rows[d].a, e.x) - rows[d].b;
                e.pos[d] = -1;
            }
            e.res[rr] = 0.0;
            double* bk = &e.inv[kk * n];
            for (std::size_t v = 0; v < n; ++v) bk[v] /= gamma[kk];
            for (std::size_t j = 0; j < n; ++j) {
                if (j == kk || gamma[j] == 0.0) continue;
                double* bj = &e.inv[j * n];
                for (std::size_t v = 0; v < n; ++v) bj[v] -= gamma[j] * bk[v];
            }
            e.work[kk] = r;
            e.pos[rr] = k;
            ++e.updates;
        }
        return false;
    }

    Status phase_one() {
        const std::size_t n1 = n_ + 1;
        aug_.clear();
        double worst = 0.0;
        long worst_row = -1;
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            const Row& row = rows_[i];
            for (int copy = 0; copy < (row.eq ? 2 : 1); ++copy) {
                const double sgn = copy == 0 ? 1.0 : -1.0;
                SparseVec a;
                for (auto [j, v] : row.a) a.emplace_back(j, sgn * v);
                a.emplace_back(n_, 1.0);
                aug_.push_back({std::move(a), sgn * row.b, false, Origin::Constraint, i, 1.0});
                if (sgn * row.b > worst) {
                    worst = sgn * row.b;
                    worst_row = static_cast<long>(aug_.size() - 1);
                }
            }
        }
        if (worst <= kFeasTol) {
            std::vector<long> w(n_);
            for (std::size_t k = 0; k < n_; ++k) w[k] = -static_cast<long>(k) - 1;
            eng_.init(n_, rows_, std::move(w), Vec(n_, 0.0), Vec(n_, 0.0));
            return eng_.refactor() ? Status::Optimal : Status::NumericFailure;
        }
        aug_.push_back({{{n_, 1.0}}, 0.0, false, Origin::Constraint, rows_.size(), 1.0});
        const std::size_t s_row = aug_.size() - 1;

        Engine e;
        std::vector<long> w(n1);
        for (std::size_t k = 0; k < n_; ++k) w[k] = -static_cast<long>(k) - 1;
        w[n_] = worst_row;
        e.init(n1, aug_, std::move(w), Vec(n1, 0.0), Vec(n1, 0.0));
        if (!e.refactor()) return Status::NumericFailure;
        Vec cs(n1, 0.0);
        cs[n_] = 1.0;
        Status s = iterate(e, cs, iterations_, max_iterations());
        if (s != Status::Optimal) return s == Status::Unbounded ? Status::NumericFailure : s;
        if (e.x[n_] > 1e-9) return Status::Infeasible;

        // Drop one augmented row so the remaining ones fix x alone.
        std::size_t drop = n1;
        if (e.pos[s_row] >= 0) {
            drop = static_cast<std::size_t>(e.pos[s_row]);
        } else {
            double big = -1.0;
            for (std::size_t j = 0; j < n1; ++j) {
                double v = std::abs(e.inv[j * n1 + n_]);
                if (v > big) {
                    big = v;
                    drop = j;
                }
            }
        }
        // Candidate rows in working-set order; duplicates of an equality row
        // are skipped and the basis is completed with artificial rows.
        std::vector<long> cand;
        for (std::size_t j = 0; j < n1; ++j) {
            if (j == drop) continue;
            long a = e.work[j];
            if (a < 0) {
                cand.push_back(a);
            } else {
                std::size_t orig = aug_[static_cast<std::size_t>(a)].index;
                if (orig < rows_.size()) cand.push_back(static_cast<long>(orig));
            }
        }
        for (std::size_t k = 0; k < n_; ++k) cand.push_back(-static_cast<long>(k) - 1);
        std::vector<long> w2;
        std::vector<Vec> basis;
        std::vector<char> used(rows_.size(), 0);
        Vec arts(n_, 0.0);
        for (long a : cand) {
            if (w2.size() == n_) break;
            Vec v(n_, 0.0);
            if (a < 0) {
                v[static_cast<std::size_t>(-a - 1)] = 1.0;
            } else {
                if (used[static_cast<std::size_t>(a)]) continue;
                for (auto [j, val] : rows_[static_cast<std::size_t>(a)].a) v[j] = val;
            }
            for (const auto& o : basis) axpy(-dot(v, o), o, v);
            double nv = norm2(v);
            if (nv < 1e-9) continue;
            basis.push_back(scale(v, 1.0 / nv));
            w2.push_back(a);
            if (a >= 0)
                used[static_cast<std::size_t>(a)] = 1;
            else
                arts[static_cast<std::size_t>(-a - 1)] = e.x[static_cast<std::size_t>(-a - 1)];
        }
        if (w2.size() != n_) return Status::NumericFailure;
        Vec x0(e.x.begin(), e.x.begin() + static_cast<std::ptrdiff_t>(n_));
        eng_.init(n_, rows_, std::move(w2), std::move(arts), std::move(x0));
        return eng_.refactor() ? Status::Optimal : Status::NumericFailure;
    }

    Status run(const Vec& c) {
        if (eng_.updates >= 32 && !eng_.refactor()) return Status::NumericFailure;
        return iterate(eng_, c, iterations_, max_iterations());
    }

    std::size_t max_iterations() const { return 50 * (n_ + rows_.size()) + 1000; }

    Result finish(Status s) {
        Result r;
        r.status = s;
        r.iterations = iterations_;
        if (s != Status::Optimal) return r;
        r.x = n_ ? eng_.x : Vec{};
        r.value = dot(c_, r.x);
        r.duals.assign(m_orig_, 0.0);
        r.bound_duals.assign(n_, 0.0);
        for (std::size_t j = 0; j < n_; ++j) {
            long w = eng_.work[j];
            if (w < 0) continue;
            double lam = dot(std::span(&eng_.inv[j * n_], n_), c_);
            const Row& row = rows_[static_cast<std::size_t>(w)];
            double y = lam * row.factor;
            if (row.origin == Origin::Constraint)
                r.duals[row.index] += y;
            else
                r.bound_duals[row.index] += y;
        }
        return r;
    }

    std::size_t n_;
    std::size_t m_orig_;
    Vec c_;
    std::vector<Row> rows_;
    std::vector<Row> aug_;
    Engine eng_;
    bool trivially_infeasible_ = false;
    bool warm_ = false;
    bool basis_valid_ = false;  // eng_ holds an optimal basis, possibly for fewer rows
    std::size_t iterations_ = 0;
};

inline Result solve(const LinearProgram& lp) { return Solver(lp).solve(); }

}  // namespace setrisk::lp
