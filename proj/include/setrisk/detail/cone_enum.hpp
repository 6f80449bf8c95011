#pragma once

// Incremental double description for polyhedral cones {y : a_i . y >= 0}.
// Rays are kept modulo the current lineality space; adjacency needs both the
// rank test and the combinatorial test, which guards against round-off.

#include <bit>
#include <cstdint>

#include "setrisk/common.hpp"

namespace setrisk::detail {

class ConeEnumerator {
public:
    explicit ConeEnumerator(std::size_t dim, double tol = 1e-9) : dim_(dim), tol_(tol) {
        for (std::size_t i = 0; i < dim; ++i) lin_.push_back(unit(dim, i));
    }

    std::size_t dim() const { return dim_; }
    std::size_t constraint_count() const { return cons_.size(); }
    const std::vector<Vec>& lineality() const { return lin_; }
    const std::vector<Vec>& constraints() const { return cons_; }

    std::vector<Vec> rays() const {
        std::vector<Vec> out;
        out.reserve(rays_.size());
        for (const auto& r : rays_) out.push_back(r.v);
        return out;
    }

    /// Indices of constraints tight at ray i.
    std::vector<std::size_t> active_set(std::size_t i) const {
        std::vector<std::size_t> s;
        for (std::size_t j = 0; j < cons_.size(); ++j)
            if (test(rays_[i].zero, j)) s.push_back(j);
        return s;
    }

    /// Intersects the cone with {y : a . y >= 0}. Returns the constraint index.
    std::size_t add(std::span<const double> a_in) {
        Vec a = normalized2(a_in);
        const std::size_t idx = cons_.size();
        cons_.push_back(a);
        words_ = (cons_.size() + 63) / 64;
        for (auto& r : rays_) r.zero.resize(words_, 0);

        if (norm2(a) == 0.0) {
            for (auto& r : rays_) set(r.zero, idx);
            return idx;
        }

        // Lineality not orthogonal to a: one line turns into a ray.
        std::size_t best = lin_.size();
        double best_val = tol_;
        for (std::size_t k = 0; k < lin_.size(); ++k) {
            double v = std::abs(dot(a, lin_[k]));
            if (v > best_val) {
                best_val = v;
                best = k;
            }
        }
        if (best < lin_.size()) {
            Vec l = lin_[best];
            double al = dot(a, l);
            if (al < 0) {
                for (double& x : l) x = -x;
                al = -al;
            }
            lin_.erase(lin_.begin() + static_cast<std::ptrdiff_t>(best));
            for (auto& other : lin_) axpy(-dot(a, other) / al, l, other);
            orthonormalize(lin_);
            for (auto& r : rays_) {
                axpy(-dot(a, r.v) / al, l, r.v);
                r.v = normalized2(r.v);
                set(r.zero, idx);
            }
            Ray nr{normalized2(l), std::vector<std::uint64_t>(words_, 0)};
            for (std::size_t j = 0; j < idx; ++j) set(nr.zero, j);
            rays_.push_back(std::move(nr));
            return idx;
        }

        std::vector<double> s(rays_.size());
        std::vector<std::size_t> pos, neg;
        for (std::size_t i = 0; i < rays_.size(); ++i) {
            s[i] = dot(a, rays_[i].v);
            if (s[i] > tol_)
                pos.push_back(i);
            else if (s[i] < -tol_)
                neg.push_back(i);
            else
                set(rays_[i].zero, idx);
        }
        if (neg.empty()) return idx;

        const std::size_t target = dim_ - lin_.size() >= 2 ? dim_ - lin_.size() - 2 : 0;
        std::vector<Ray> fresh;
        std::vector<std::uint64_t> common(words_);
        for (std::size_t p : pos) {
            for (std::size_t q : neg) {
                std::size_t cnt = 0;
                for (std::size_t w = 0; w < words_; ++w) {
                    common[w] = rays_[p].zero[w] & rays_[q].zero[w];
                    cnt += static_cast<std::size_t>(std::popcount(common[w]));
                }
                if (cnt < target) continue;
                if (target > 0 && rank_of(common, target) < target) continue;
                if (dominated(common, p, q)) continue;
                Vec v = scale(rays_[q].v, s[p]);
                axpy(-s[q], rays_[p].v, v);
                Ray nr{normalized2(v), common};
                set(nr.zero, idx);
                fresh.push_back(std::move(nr));
            }
        }
        std::vector<Ray> kept;
        kept.reserve(rays_.size() - neg.size() + fresh.size());
        for (std::size_t i = 0; i < rays_.size(); ++i)
            if (s[i] >= -tol_) kept.push_back(std::move(rays_[i]));
        for (auto& r : fresh) kept.push_back(std::move(r));
        rays_ = std::move(kept);
        return idx;
    }

private:
    struct Ray {
        Vec v;
        std::vector<std::uint64_t> zero;
    };

    static void set(std::vector<std::uint64_t>& bits, std::size_t j) {
        bits[j / 64] |= std::uint64_t{1} << (j % 64);
    }
    static bool test(const std::vector<std::uint64_t>& bits, std::size_t j) {
        return (bits[j / 64] >> (j % 64)) & 1u;
    }

    static void orthonormalize(std::vector<Vec>& basis) {
        std::vector<Vec> out;
        for (auto& b : basis) {
            Vec v = b;
            for (const auto& o : out) axpy(-dot(v, o), o, v);
            double n = norm2(v);
            if (n > 1e-12) out.push_back(scale(v, 1.0 / n));
        }
        basis = std::move(out);
    }

    /// Combinatorial adjacency: some third ray is tight wherever p and q both are.
    bool dominated(const std::vector<std::uint64_t>& common, std::size_t p, std::size_t q) const {
        for (std::size_t r = 0; r < rays_.size(); ++r) {
            if (r == p || r == q) continue;
            const auto& z = rays_[r].zero;
            bool covers = true;
            for (std::size_t w = 0; w < words_ && covers; ++w) covers = (common[w] & ~z[w]) == 0;
            if (covers) return true;
        }
        return false;
    }

    /// Rank of the constraint rows flagged in bits, capped at `cap`.
    std::size_t rank_of(const std::vector<std::uint64_t>& bits, std::size_t cap) const {
        std::vector<Vec> basis;
        for (std::size_t w = 0; w < words_; ++w) {
            std::uint64_t word = bits[w];
            while (word) {
                std::size_t j = w * 64 + static_cast<std::size_t>(std::countr_zero(word));
                word &= word - 1;
                Vec v = cons_[j];
                for (const auto& o : basis) axpy(-dot(v, o), o, v);
                double n = norm2(v);
                if (n > 1e-7) {
                    basis.push_back(scale(v, 1.0 / n));
                    if (basis.size() >= cap) return basis.size();
                }
            }
        }
        return basis.size();
    }

    std::size_t dim_;
    double tol_;
    std::size_t words_ = 0;
    std::vector<Vec> lin_;
    std::vector<Vec> cons_;
    std::vector<Ray> rays_;
};

}  // namespace setrisk::detail
