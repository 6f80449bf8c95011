#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "setrisk/riskmeasures.hpp"

using namespace setrisk;
using namespace setrisk::risk;
using geometry::OrderingCone;
using geometry::Polyhedron;

namespace {

bool has_point(const std::vector<Vec>& pts, const Vec& p, double tol = 1e-7) {
    for (const auto& q : pts)
        if (norm_inf(sub(p, q)) <= tol) return true;
    return false;
}

Polyhedron solve(const NodeProblem& np, const RiskMeasureSpec& spec, double eps = 1e-4) {
    if (!spec.convex()) return vop::solve_linear(np.vp).upper_image;
    vop::Options opt;
    opt.window = Vec(np.vp.image_dim(), 50.0);
    return vop::solve_convex(np.vp, eps, opt).upper_image;
}

Polyhedron onestep(const RiskMeasureSpec& spec, std::size_t d, const Vec& prob, const std::vector<Polyhedron>& kids) {
    auto M = eligible(spec, d);
    std::vector<const Polyhedron*> ptrs;
    for (const auto& k : kids) ptrs.push_back(&k);
    return solve(onestep_problem(spec, M, prob, ptrs, nullptr, M.cone.interior_direction()), spec);
}

Polyhedron cone_at(const Vec& v) { return geometry::shifted_cone(v, OrderingCone::orthant(v.size())); }

RiskMeasureSpec worst() { return {}; }

RiskMeasureSpec avar(Vec l) {
    RiskMeasureSpec s;
    s.kind = Kind::avar;
    s.lambda = std::move(l);
    return s;
}

RiskMeasureSpec relaxed3() {
    RiskMeasureSpec s;
    s.kind = Kind::relaxed_worst_case;
    s.epsilon = {0.25, 0.25, 0.25};
    s.G = {{1, -0.25, -0.25}, {-0.25, 1, -0.25}, {-0.25, -0.25, 1}};
    return s;
}

RiskMeasureSpec relaxed2() {
    RiskMeasureSpec s;
    s.kind = Kind::relaxed_worst_case;
    s.epsilon = {0.2, 0.3};
    s.G = {{1, -0.5}, {-0.25, 1}};
    return s;
}

RiskMeasureSpec entropic(Vec l, std::vector<Vec> C = {}) {
    RiskMeasureSpec s;
    s.kind = Kind::entropic;
    s.lambda = std::move(l);
    s.C_dual = std::move(C);
    return s;
}

std::vector<Polyhedron> random_children(std::mt19937_64& rng, std::size_t n, std::size_t d) {
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    std::vector<Polyhedron> kids;
    for (std::size_t s = 0; s < n; ++s) {
        std::vector<Vec> pts(2, Vec(d));
        for (auto& p : pts)
            for (auto& v : p) v = U(rng);
        kids.push_back(geometry::from_points(d, pts, OrderingCone::orthant(d)));
    }
    return kids;
}

Vec random_prob(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> U(0.1, 1.0);
    Vec p(n);
    double t = 0;
    for (auto& v : p) t += v = U(rng);
    for (auto& v : p) v /= t;
    return p;
}

/// Rockafellar-Uryasev LP: min z + (1/l) sum p_s t_s, t_s >= -x_s - z, t_s >= 0.
double ru_lp(const Vec& x, const Vec& p, double l) {
    lp::LinearProgram prog;
    prog.add_variable(-lp::kInf, lp::kInf, 1.0);
    for (std::size_t s = 0; s < x.size(); ++s) {
        prog.add_variable(0.0, lp::kInf, p[s] / l);
        prog.add({{s + 1, 1.0}, {0, 1.0}}, lp::Relation::GreaterEqual, -x[s]);
    }
    auto r = lp::solve(prog);
    REQUIRE(r.optimal());
    return r.value;
}

}  // namespace

TEST_CASE("terminal: worst case is the negated payoff plus the orthant") {
    auto spec = worst();
    auto M = eligible(spec, 2);
    Vec X{-1, 2};
    auto P = solve(terminal_problem(spec, M, X, nullptr, M.cone.interior_direction()), spec);
    REQUIRE(P.vertices.size() == 1);
    CHECK(has_point(P.vertices, {1, -2}));
}

TEST_CASE("terminal: relaxed worst case matches vertex enumeration") {
    auto spec = relaxed3();
    spec.validate(3);
    auto M = eligible(spec, 3);
    Vec X{0, 0, 0};
    auto P = solve(terminal_problem(spec, M, X, nullptr, M.cone.interior_direction()), spec);
    std::vector<geometry::Halfspace> hs;
    for (std::size_t i = 0; i < 3; ++i) hs.push_back({unit(3, i), -0.25});
    auto G = spec.G_cone(3);
    for (const auto& w : G.dual_generators()) hs.push_back({scale(w, 1.0 / norm2(w)), 0.0});
    auto V = geometry::vertex_enum(3, hs, OrderingCone::orthant(3));
    REQUIRE(P.vertices.size() == V.vertices.size());
    for (const auto& v : V.vertices) CHECK(has_point(P.vertices, v));
    CHECK(V.vertices.size() > 1);
}

TEST_CASE("terminal: single-state AV@R is the worst case") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-3, 3);
    auto spec = avar({0.3, 0.3});
    auto M = eligible(spec, 2);
    for (int k = 0; k < 5; ++k) {
        Vec X{U(rng), U(rng)};
        auto P = solve(terminal_problem(spec, M, X, nullptr, M.cone.interior_direction()), spec);
        REQUIRE(P.vertices.size() == 1);
        CHECK(has_point(P.vertices, scale(X, -1.0)));
    }
}

TEST_CASE("onestep: worst case is the componentwise supremum") {
    auto P = onestep(worst(), 2, {0.5, 0.5}, {cone_at({1, -1}), cone_at({-2, 3})});
    REQUIRE(P.vertices.size() == 1);
    CHECK(has_point(P.vertices, {1, 3}));

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        auto kids = random_children(rng, 3, 2);
        auto Q = onestep(worst(), 2, random_prob(rng, 3), kids);
        // Y >= Z(s) for some Z(s) in each upper set: the intersection of the children.
        std::vector<geometry::Halfspace> hs;
        for (const auto& k : kids) hs.insert(hs.end(), k.halfspaces.begin(), k.halfspaces.end());
        auto oracle = geometry::from_halfspaces(2, hs, OrderingCone::orthant(2));
        CHECK(geometry::equal(Q, oracle));
    }
}

TEST_CASE("onestep: scalar AV@R example has value 1") {
    auto P = onestep(avar({0.5}), 1, {0.5, 0.5}, {cone_at({0}), cone_at({1})});
    REQUIRE(P.vertices.size() == 1);
    CHECK(P.vertices[0][0] == Catch::Approx(1.0).margin(1e-9));
    CHECK(ru_lp({0, -1}, {0.5, 0.5}, 0.5) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("onestep: AV@R agrees with the Rockafellar-Uryasev LP") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-2, 2), L(0.05, 0.95);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t n = 2 + trial % 4;
        Vec p = random_prob(rng, n), l{L(rng), L(rng)};
        std::vector<Polyhedron> kids;
        Vec x0(n), x1(n);
        for (std::size_t s = 0; s < n; ++s) {
            Vec v{U(rng), U(rng)};
            x0[s] = -v[0];
            x1[s] = -v[1];
            kids.push_back(cone_at(v));
        }
        auto P = onestep(avar(l), 2, p, kids);
        REQUIRE(P.vertices.size() == 1);
        CHECK(P.vertices[0][0] == Catch::Approx(ru_lp(x0, p, l[0])).margin(1e-7));
        CHECK(P.vertices[0][1] == Catch::Approx(ru_lp(x1, p, l[1])).margin(1e-7));
        CHECK(scalar_avar(x0, p, l[0]) == Catch::Approx(ru_lp(x0, p, l[0])).margin(1e-9));
    }
}

TEST_CASE("onestep: AV@R near lambda 1 is the expectation") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> U(-2, 2);
    for (int trial = 0; trial < 5; ++trial) {
        Vec p = random_prob(rng, 4);
        std::vector<Polyhedron> kids;
        double mean = 0;
        for (std::size_t s = 0; s < 4; ++s) {
            double v = U(rng);
            mean += p[s] * v;
            kids.push_back(cone_at({v}));
        }
        auto P = onestep(avar({0.999}), 1, p, kids);
        CHECK(P.vertices[0][0] == Catch::Approx(mean).margin(1e-2));
    }
}

TEST_CASE("onestep: scalar entropic closed form") {
    for (double x : {-3.0, 0.5, 4.0}) {
        auto spec = entropic({0.1});
        auto M = eligible(spec, 1);
        std::vector<Polyhedron> kids{cone_at({0}), cone_at({x})};
        std::vector<const Polyhedron*> ptrs{&kids[0], &kids[1]};
        Vec p{0.5, 0.5};
        auto np = onestep_problem(spec, M, p, ptrs, nullptr, {1.0});
        vop::Options opt;
        opt.window = Vec{50.0};
        const double eps = 1e-4;
        auto s = vop::solve_convex(np.vp, eps, opt);
        double u = std::log(0.5 * (1 + std::exp(0.1 * x))) / 0.1;
        REQUIRE(s.upper_image.vertices.size() == 1);
        REQUIRE(s.inner.vertices.size() == 1);
        CHECK(s.upper_image.vertices[0][0] <= u + 1e-9);
        CHECK(s.inner.vertices[0][0] >= u - 1e-9);
        CHECK(s.inner.vertices[0][0] - s.upper_image.vertices[0][0] <= eps + 1e-12);
    }
}

TEST_CASE("onestep: translativity") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1, 1);
    for (const auto& spec : {worst(), relaxed2(), avar({0.4, 0.7})}) {
        for (int trial = 0; trial < 5; ++trial) {
            auto kids = random_children(rng, 3, 2);
            Vec p = random_prob(rng, 3), v{U(rng), U(rng)};
            auto P = onestep(spec, 2, p, kids);
            std::vector<Polyhedron> moved;
            for (const auto& k : kids) moved.push_back(geometry::translate(k, v));
            auto Q = onestep(spec, 2, p, moved);
            CHECK(geometry::equal(geometry::translate(P, v), Q, 1e-7));
        }
    }
}

TEST_CASE("onestep: monotone in the child sets") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> U(0, 1);
    for (const auto& spec : {worst(), relaxed2(), avar({0.4, 0.7})}) {
        for (int trial = 0; trial < 5; ++trial) {
            auto kids = random_children(rng, 3, 2);
            Vec p = random_prob(rng, 3);
            auto P = onestep(spec, 2, p, kids);
            auto bigger = kids;
            std::size_t s = trial % 3;
            auto pts = kids[s].vertices;
            pts.push_back(sub(kids[s].vertices[0], Vec{U(rng), U(rng)}));
            bigger[s] = geometry::from_points(2, pts, OrderingCone::orthant(2));
            auto Q = onestep(spec, 2, p, bigger);
            CHECK(geometry::includes(Q, P));
        }
    }
}

TEST_CASE("onestep: frontier agrees with direct membership") {
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> U(-2, 2);
    for (const auto& spec : {worst(), relaxed2(), avar({0.4, 0.7})}) {
        for (int trial = 0; trial < 5; ++trial) {
            Vec p = random_prob(rng, 3);
            std::vector<Polyhedron> kids;
            std::vector<Vec> X;
            for (int s = 0; s < 3; ++s) {
                Vec v{U(rng), U(rng)};
                kids.push_back(cone_at(v));
                X.push_back(scale(v, -1.0));
            }
            auto P = onestep(spec, 2, p, kids);
            for (const auto& v : P.vertices) {
                CHECK(measure_contains(spec, X, p, v, 1e-9));
                CHECK_FALSE(measure_contains(spec, X, p, sub(v, Vec{1e-4, 1e-4}), 1e-9));
            }
            for (int k = 0; k < 50; ++k) {
                Vec y{3 * U(rng), 3 * U(rng)};
                if (std::abs([&] {
                        double m = lp::kInf;
                        for (const auto& h : P.halfspaces) m = std::min(m, dot(h.normal, y) - h.offset);
                        return m;
                    }()) < 1e-6)
                    continue;
                CHECK(P.contains(y, 1e-9) == measure_contains(spec, X, p, y, 1e-9));
            }
        }
    }
}

TEST_CASE("entropic: sandwich, membership and convexity of the feasible set") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> U(-2, 2), W(0, 1);
    auto spec = entropic({0.5, 1.0}, {{1, 0.9}, {0.9, 1}});
    spec.validate(2);
    auto M = eligible(spec, 2);
    Vec p{0.3, 0.7};
    std::vector<Polyhedron> kids{cone_at({U(rng), U(rng)}), cone_at({U(rng), U(rng)})};
    std::vector<Vec> X{scale(kids[0].vertices[0], -1.0), scale(kids[1].vertices[0], -1.0)};
    std::vector<const Polyhedron*> ptrs{&kids[0], &kids[1]};
    auto np = onestep_problem(spec, M, p, ptrs, nullptr, M.cone.interior_direction());
    vop::Options opt;
    opt.window = Vec{30, 30};
    const double eps = 0.01;
    auto s = vop::solve_convex(np.vp, eps, opt);
    REQUIRE(s.converged);
    Vec m = M.cone.interior_direction();
    CHECK(geometry::includes(s.upper_image, s.inner));
    CHECK(geometry::includes(s.inner, geometry::translate(s.upper_image, scale(m, eps))));
    for (const auto& v : s.inner.vertices) CHECK(measure_contains(spec, X, p, v, 1e-8));
    for (const auto& v : s.upper_image.vertices)
        CHECK(measure_contains(spec, X, p, add(v, scale(m, eps)), 1e-8));

    auto feasible = [&](const Vec& x) {
        for (const auto& r : np.vp.rows) {
            double v = dot(r.row, x);
            if (r.rel == lp::Relation::GreaterEqual && v < r.rhs - 1e-8) return false;
        }
        for (const auto& g : np.vp.convex)
            if (g.value(x) > 1e-8) return false;
        return true;
    };
    for (const auto& pt : s.points) CHECK(feasible(pt.x));
    for (int k = 0; k < 100; ++k) {
        const auto& a = s.points[k % s.points.size()].x;
        const auto& b = s.points[(k * 7 + 3) % s.points.size()].x;
        double t = W(rng);
        CHECK(feasible(add(scale(a, t), scale(b, 1 - t))));
    }
}

TEST_CASE("eligible subspace: entropic on span(e0) in R^2") {
    auto spec = entropic({0.3, 0.3});
    spec.M_basis = {{1, 0}};
    spec.validate(2);
    auto M = eligible(spec, 2);
    REQUIRE(M.q() == 1);
    CHECK_FALSE(M.full());
    std::vector<Polyhedron> kids{cone_at({-1.0}), cone_at({2.0})};
    std::vector<const Polyhedron*> ptrs{&kids[0], &kids[1]};
    Vec p{0.4, 0.6};
    auto np = onestep_problem(spec, M, p, ptrs, nullptr, M.cone.interior_direction());
    vop::Options opt;
    opt.window = Vec{50.0};
    auto s = vop::solve_convex(np.vp, 1e-5, opt);
    double u = std::log(0.4 * std::exp(0.3 * -1.0) + 0.6 * std::exp(0.3 * 2.0)) / 0.3;
    REQUIRE(s.upper_image.vertices.size() == 1);
    CHECK(s.upper_image.vertices[0][0] == Catch::Approx(u).margin(2e-5));

    auto [y, res] = M.coordinates(Vec{2.5, 0.0});
    CHECK(y[0] == Catch::Approx(2.5));
    CHECK(res < 1e-12);
    CHECK(M.coordinates(Vec{0.0, 1.0}).second > 0.5);
}

TEST_CASE("validation") {
    CHECK_THROWS_AS(avar({0.3}).validate(2), ValidationError);
    CHECK_THROWS_AS(avar({0.3, 1.0}).validate(2), ValidationError);
    CHECK_THROWS_AS(entropic({0.1, -1}).validate(2), ValidationError);
    CHECK_THROWS_AS(entropic({0.1, 0.1}, {{1, -0.9}}).validate(2), ValidationError);
    auto r = relaxed2();
    r.G = {{1, 0.5}, {0.5, 1}};
    CHECK_THROWS_AS(r.validate(2), ValidationError);
    r.G = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    CHECK_THROWS_AS(r.validate(2), ValidationError);
    auto w = worst();
    w.M_basis = {{1, 1}, {2, 2}};
    CHECK_THROWS_AS(w.validate(2), ValidationError);
    w.M_basis = {{1, -1}};
    w.validate(2);
    CHECK_THROWS_AS(eligible(w, 2), ValidationError);
    CHECK_THROWS_AS(kind_from_string("cvar"), ValidationError);
}

TEST_CASE("payoffs on a small tree") {
    tree::TreeParams tp;
    tp.d = 2;
    tp.T = 2;
    tp.horizon = 1.0;
    tp.n = 2;
    tp.mu = {0.1};
    tp.sigma = {0.3};
    tp.rho = {{1.0}};
    tp.S0 = {1.0};
    tp.r = 0.0;
    tp.gamma = {0.05};
    auto tr = tree::build_tree(tp);
    auto put = put_claim(tr, 1.1, Price::mid);
    REQUIRE(put.size() == tr.slices.back().size());
    for (auto [id, v] : put) {
        CHECK(v[0] == Catch::Approx(std::max(1.1 - tr.node(id).S[0], 0.0)));
        CHECK(v[1] == 0.0);
    }
    auto bin = binary_claim(tr, 1.0, 10.0, Price::ask);
    for (auto [id, v] : bin) CHECK(v[0] == (tr.node(id).ask[0] >= 1.0 ? 10.0 : 0.0));
    auto neg = negate(bin);
    for (auto [id, v] : neg) CHECK(v[0] == -bin[id][0]);
    CHECK(price_from_string("bid") == Price::bid);
    CHECK_THROWS_AS(price_from_string("last"), ValidationError);
}
