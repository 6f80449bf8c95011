#pragma once

#include <cstdio>
#include <nlohmann/json.hpp>

#include "setrisk/common.hpp"
#include "setrisk/detail/cone_enum.hpp"

namespace setrisk::geometry {

namespace detail {

inline bool near(std::span<const double> a, std::span<const double> b, double tol) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > tol) return false;
    return true;
}

/// Appends v unless an entry within tol (max-norm, relative to scale) exists.
inline void push_unique(std::vector<Vec>& set, Vec v, double tol) {
    double s = std::max(1.0, norm_inf(v));
    for (const auto& w : set)
        if (near(w, v, tol * s)) return;
    set.push_back(std::move(v));
}

}  // namespace detail

/// Closed convex cone given by generators (unit max-norm) and the generators
/// of its dual cone. Lines are stored as paired opposite generators.
class OrderingCone {
public:
    OrderingCone() = default;

    static OrderingCone orthant(std::size_t d) {
        OrderingCone c;
        c.dim_ = d;
        for (std::size_t i = 0; i < d; ++i) {
            c.gens_.push_back(unit(d, i));
            c.duals_.push_back(unit(d, i));
        }
        return c;
    }

    static OrderingCone from_generators(std::size_t d, const std::vector<Vec>& gens) {
        setrisk::detail::ConeEnumerator dual(d);
        for (const auto& g : gens) {
            if (g.size() != d) throw ValidationError("cone generator has wrong dimension");
            dual.add(g);
        }
        if (!dual.lineality().empty())
            throw ValidationError("ordering cone has empty interior");
        std::vector<Vec> duals;
        for (const auto& r : dual.rays()) detail::push_unique(duals, normalized_inf(r), 1e-9);
        if (duals.empty()) throw ValidationError("ordering cone is the whole space");
        return from_dual(d, duals);
    }

    static OrderingCone from_dual(std::size_t d, const std::vector<Vec>& duals) {
        setrisk::detail::ConeEnumerator primal(d);
        for (const auto& w : duals) {
            if (w.size() != d) throw ValidationError("dual generator has wrong dimension");
            primal.add(w);
        }
        OrderingCone c;
        c.dim_ = d;
        for (const auto& r : primal.rays()) detail::push_unique(c.gens_, normalized_inf(r), 1e-9);
        for (const auto& l : primal.lineality()) {
            detail::push_unique(c.gens_, normalized_inf(l), 1e-9);
            detail::push_unique(c.gens_, normalized_inf(scale(l, -1.0)), 1e-9);
        }
        if (c.gens_.empty()) throw ValidationError("ordering cone is {0}");
        // Irredundant duals: extreme rays of the dual of the primal.
        setrisk::detail::ConeEnumerator dual(d);
        for (const auto& g : c.gens_) dual.add(g);
        if (!dual.lineality().empty()) throw ValidationError("ordering cone has empty interior");
        for (const auto& r : dual.rays()) detail::push_unique(c.duals_, normalized_inf(r), 1e-9);
        if (c.duals_.empty()) throw ValidationError("ordering cone is the whole space");
        return c;
    }

    std::size_t dim() const { return dim_; }
    const std::vector<Vec>& generators() const { return gens_; }
    const std::vector<Vec>& dual_generators() const { return duals_; }

    bool contains(std::span<const double> v, double tol = kFeasTol) const {
        double s = std::max(1.0, norm_inf(v));
        for (const auto& w : duals_)
            if (dot(w, v) < -tol * s) return false;
        return true;
    }

    bool has_lines() const {
        for (std::size_t i = 0; i < gens_.size(); ++i)
            for (std::size_t j = i + 1; j < gens_.size(); ++j)
                if (detail::near(gens_[i], scale(gens_[j], -1.0), 1e-12)) return true;
        return false;
    }

    /// Normalized sum of the generators.
    Vec interior_direction() const {
        Vec m(dim_, 0.0);
        for (const auto& g : gens_) axpy(1.0, g, m);
        return normalized_inf(m);
    }

private:
    std::size_t dim_ = 0;
    std::vector<Vec> gens_;
    std::vector<Vec> duals_;
};

/// {x : normal . x >= offset}, normal of unit Euclidean length.
struct Halfspace {
    Vec normal;
    double offset = 0.0;
};

struct VRep {
    std::vector<Vec> vertices;
    std::vector<Vec> directions;
};

/// Closed convex upper set conv(vertices) + cone(directions) = {x : Ax >= b}.
struct Polyhedron {
    std::size_t dim = 0;
    std::vector<Halfspace> halfspaces;
    std::vector<Vec> vertices;
    std::vector<Vec> directions;
    OrderingCone cone;

    bool contains(std::span<const double> x, double tol = kFeasTol) const {
        for (const auto& h : halfspaces)
            if (dot(h.normal, x) < h.offset - tol) return false;
        return true;
    }
};

inline bool contains(const Polyhedron& P, std::span<const double> x, double tol = kFeasTol) {
    return P.contains(x, tol);
}

/// Irredundant H-representation of conv(points) + cone(directions).
inline std::vector<Halfspace> facet_enum(std::size_t d, const std::vector<Vec>& points,
                                         const std::vector<Vec>& directions) {
    if (points.empty()) throw InfeasibleError("facet_enum: no points");
    double sigma = 1.0;
    for (const auto& p : points) sigma = std::max(sigma, norm_inf(p));
    setrisk::detail::ConeEnumerator dd(d + 1);
    Vec row(d + 1);
    for (const auto& dir : directions) {
        row[0] = 0.0;
        std::copy(dir.begin(), dir.end(), row.begin() + 1);
        dd.add(normalized_inf(row));
    }
    for (const auto& p : points) {
        row[0] = sigma;
        std::copy(p.begin(), p.end(), row.begin() + 1);
        dd.add(row);
    }
    std::vector<Halfspace> out;
    auto emit = [&](const Vec& y) {
        Vec a(y.begin() + 1, y.end());
        double n = norm2(a);
        if (n <= 1e-9 * std::abs(y[0]) || n == 0.0) return;
        Halfspace h{scale(a, 1.0 / n), -sigma * y[0] / n};
        for (const auto& o : out)
            if (detail::near(o.normal, h.normal, 1e-9) &&
                std::abs(o.offset - h.offset) <= 1e-9 * std::max(1.0, std::abs(h.offset)))
                return;
        out.push_back(std::move(h));
    };
    for (const auto& r : dd.rays()) emit(r);
    for (const auto& l : dd.lineality()) {
        emit(l);
        emit(scale(l, -1.0));
    }
    return out;
}

/// Vertices and extreme directions of {x : Ax >= b}. Throws InfeasibleError
/// for an empty set and DegenerateError when a direction leaves `cone`.
inline VRep vertex_enum(std::size_t d, const std::vector<Halfspace>& halfspaces,
                        const OrderingCone& cone) {
    double sigma = 1.0;
    for (const auto& h : halfspaces) {
        double n = norm2(h.normal);
        if (n > 0) sigma = std::max(sigma, std::abs(h.offset) / n);
    }
    setrisk::detail::ConeEnumerator dd(d + 1);
    Vec row(d + 1, 0.0);
    row[0] = 1.0;
    dd.add(row);
    for (const auto& h : halfspaces) {
        double n = norm2(h.normal);
        if (n == 0.0) {
            if (h.offset > kFeasTol) throw InfeasibleError("vertex_enum: 0 >= positive offset");
            continue;
        }
        row[0] = -h.offset / (sigma * n);
        for (std::size_t i = 0; i < d; ++i) row[i + 1] = h.normal[i] / n;
        dd.add(row);
    }
    VRep out;
    std::vector<Vec> lines;
    for (const auto& l : dd.lineality()) lines.push_back(normalized2(Vec(l.begin() + 1, l.end())));
    auto canonical_dir = [&](Vec v) {
        v = normalized_inf(v);
        for (const auto& g : cone.generators())
            if (detail::near(g, v, 1e-7)) return g;
        return v;
    };
    for (const auto& r : dd.rays()) {
        Vec x(r.begin() + 1, r.end());
        if (r[0] > 1e-9) {
            x = scale(x, sigma / r[0]);
            for (const auto& l : lines) axpy(-dot(x, l), l, x);
            detail::push_unique(out.vertices, std::move(x), 1e-9);
        } else {
            detail::push_unique(out.directions, canonical_dir(x), 1e-9);
        }
    }
    for (const auto& l : lines) {
        detail::push_unique(out.directions, canonical_dir(l), 1e-9);
        detail::push_unique(out.directions, canonical_dir(scale(l, -1.0)), 1e-9);
    }
    if (out.vertices.empty()) throw InfeasibleError("vertex_enum: empty polyhedron");
    for (const auto& dir : out.directions)
        if (!cone.contains(dir, 1e-7))
            throw DegenerateError("vertex_enum: recession direction " + to_string(dir) +
                                  " outside the ordering cone");
    for (const auto& g : cone.generators()) detail::push_unique(out.directions, g, 1e-9);
    return out;
}

inline Polyhedron from_halfspaces(std::size_t d, const std::vector<Halfspace>& halfspaces,
                                  const OrderingCone& cone) {
    Polyhedron P;
    P.dim = d;
    P.cone = cone;
    VRep v = vertex_enum(d, halfspaces, cone);
    P.vertices = std::move(v.vertices);
    P.directions = std::move(v.directions);
    P.halfspaces = facet_enum(d, P.vertices, P.directions);
    return P;
}

/// conv(points) + cone(cone generators and extra directions), irredundant.
inline Polyhedron from_points(std::size_t d, const std::vector<Vec>& points,
                              const OrderingCone& cone, const std::vector<Vec>& extra = {}) {
    std::vector<Vec> dirs = cone.generators();
    for (const auto& e : extra) detail::push_unique(dirs, normalized_inf(e), 1e-9);
    Polyhedron P;
    P.dim = d;
    P.cone = cone;
    auto h = facet_enum(d, points, dirs);
    VRep v = vertex_enum(d, h, cone);
    P.vertices = std::move(v.vertices);
    P.directions = std::move(v.directions);
    P.halfspaces = facet_enum(d, P.vertices, P.directions);
    return P;
}

/// Q subset of P.
inline bool includes(const Polyhedron& P, const Polyhedron& Q, double tol = kSetTol) {
    if (P.dim != Q.dim) throw ValidationError("includes: dimension mismatch");
    for (const auto& v : Q.vertices)
        if (!P.contains(v, tol)) return false;
    for (const auto& dir : Q.directions)
        for (const auto& h : P.halfspaces)
            if (dot(h.normal, dir) < -tol) return false;
    return true;
}

inline bool equal(const Polyhedron& P, const Polyhedron& Q, double tol = kSetTol) {
    return includes(P, Q, tol) && includes(Q, P, tol);
}

inline Polyhedron minkowski_sum(const Polyhedron& P, const Polyhedron& Q) {
    if (P.dim != Q.dim) throw ValidationError("minkowski_sum: dimension mismatch");
    std::vector<Vec> pts;
    for (const auto& p : P.vertices)
        for (const auto& q : Q.vertices) pts.push_back(add(p, q));
    std::vector<Vec> gens = P.cone.generators();
    for (const auto& g : Q.cone.generators()) detail::push_unique(gens, g, 1e-12);
    OrderingCone cone =
        gens.size() == P.cone.generators().size() ? P.cone : OrderingCone::from_generators(P.dim, gens);
    std::vector<Vec> dirs = P.directions;
    for (const auto& e : Q.directions) detail::push_unique(dirs, e, 1e-9);
    return from_points(P.dim, pts, cone, dirs);
}

inline Polyhedron translate(const Polyhedron& P, std::span<const double> v) {
    Polyhedron out = P;
    for (auto& x : out.vertices) axpy(1.0, v, x);
    for (auto& h : out.halfspaces) h.offset += dot(h.normal, v);
    return out;
}

/// The set cone + point.
inline Polyhedron shifted_cone(std::span<const double> point, const OrderingCone& cone) {
    return from_points(point.size(), {Vec(point.begin(), point.end())}, cone);
}

inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string to_json(const Polyhedron& P) {
    auto arr = [](const std::vector<Vec>& rows) {
        std::string s = "[";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i) s += ",";
            s += "[";
            for (std::size_t j = 0; j < rows[i].size(); ++j) {
                if (j) s += ",";
                s += format_number(rows[i][j]);
            }
            s += "]";
        }
        return s + "]";
    };
    std::vector<Vec> hs;
    for (const auto& h : P.halfspaces) {
        Vec r = h.normal;
        r.push_back(h.offset);
        hs.push_back(std::move(r));
    }
    return "{\"halfspaces\":" + arr(hs) + ",\"vertices\":" + arr(P.vertices) +
           ",\"directions\":" + arr(P.directions) +
           ",\"cone_dual\":" + arr(P.cone.dual_generators()) + "}";
}

inline Polyhedron polyhedron_from_json(const nlohmann::json& j) {
    Polyhedron P;
    auto hs = j.at("halfspaces").get<std::vector<Vec>>();
    P.vertices = j.at("vertices").get<std::vector<Vec>>();
    P.directions = j.at("directions").get<std::vector<Vec>>();
    if (P.vertices.empty()) throw ValidationError("polyhedron json: no vertices");
    P.dim = P.vertices.front().size();
    for (auto& r : hs) {
        double off = r.back();
        r.pop_back();
        P.halfspaces.push_back({r, off});
    }
    P.cone = j.contains("cone_dual")
                 ? OrderingCone::from_dual(P.dim, j.at("cone_dual").get<std::vector<Vec>>())
                 : OrderingCone::orthant(P.dim);
    return P;
}

}  // namespace setrisk::geometry
