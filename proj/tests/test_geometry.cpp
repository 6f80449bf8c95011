#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "setrisk/geometry.hpp"
#include "setrisk/lp.hpp"

using namespace setrisk;
using namespace setrisk::geometry;

namespace {

const OrderingCone R2 = OrderingCone::orthant(2);

bool has_point(const std::vector<Vec>& pts, const Vec& p, double tol = 1e-9) {
    for (const auto& q : pts)
        if (norm_inf(sub(p, q)) <= tol) return true;
    return false;
}

Polyhedron upper(std::vector<Vec> pts, std::size_t d = 2) {
    return from_points(d, pts, OrderingCone::orthant(d));
}

// LP oracle: is p in conv(others) + cone(dirs)?
bool redundant(const Vec& p, const std::vector<Vec>& others, const std::vector<Vec>& dirs) {
    lp::LinearProgram prog;
    std::size_t k = others.size(), m = dirs.size();
    for (std::size_t i = 0; i < k + m; ++i) prog.add_variable(0.0, lp::kInf, 0.0);
    for (std::size_t c = 0; c < p.size(); ++c) {
        SparseVec row;
        for (std::size_t i = 0; i < k; ++i) row.emplace_back(i, others[i][c]);
        for (std::size_t j = 0; j < m; ++j) row.emplace_back(k + j, dirs[j][c]);
        prog.add(row, lp::Relation::Equal, p[c]);
    }
    SparseVec ones;
    for (std::size_t i = 0; i < k; ++i) ones.emplace_back(i, 1.0);
    prog.add(ones, lp::Relation::Equal, 1.0);
    return lp::solve(prog).optimal();
}

// Brute-force vertices: all d-subsets of halfspaces with a unique feasible intersection.
std::vector<Vec> brute_vertices(const std::vector<Halfspace>& H, std::size_t d) {
    std::vector<Vec> out;
    std::vector<std::size_t> idx(d);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t depth) {
        if (depth == d) {
            Eigen::MatrixXd A(d, d);
            Eigen::VectorXd b(d);
            for (std::size_t i = 0; i < d; ++i) {
                for (std::size_t j = 0; j < d; ++j) A(i, j) = H[idx[i]].normal[j];
                b(i) = H[idx[i]].offset;
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
            if (lu.rank() < static_cast<long>(d)) return;
            Eigen::VectorXd x = lu.solve(b);
            Vec v(x.data(), x.data() + d);
            for (const auto& h : H)
                if (dot(h.normal, v) < h.offset - 1e-9) return;
            if (!has_point(out, v, 1e-7)) out.push_back(v);
            return;
        }
        for (std::size_t i = start; i < H.size(); ++i) {
            idx[depth] = i;
            rec(i + 1, depth + 1);
        }
    };
    rec(0, 0);
    return out;
}

std::vector<Halfspace> random_upper_halfspaces(std::mt19937_64& rng, std::size_t d, std::size_t count) {
    std::uniform_real_distribution<double> U(0.05, 1.0), V(-3.0, 3.0);
    std::vector<Halfspace> H;
    for (std::size_t i = 0; i < d; ++i) H.push_back({unit(d, i), V(rng) - 4.0});
    for (std::size_t i = 0; i < count; ++i) {
        Vec a(d);
        for (auto& x : a) x = U(rng);
        double n = norm2(a);
        H.push_back({scale(a, 1 / n), V(rng) / n});
    }
    return H;
}

}  // namespace

TEST_CASE("minkowski sum of orthant with itself") {
    auto P = upper({{0, 0}});
    auto S = minkowski_sum(P, P);
    CHECK(equal(S, P));
    REQUIRE(S.vertices.size() == 1);
}

TEST_CASE("minkowski sum of translated orthants") {
    auto S = minkowski_sum(upper({{1, 0}}), upper({{0, 1}}));
    REQUIRE(S.vertices.size() == 1);
    CHECK(has_point(S.vertices, {1, 1}));
}

TEST_CASE("minkowski sum prunes redundant pairwise sums") {
    auto P = upper({{0, 0}, {2, 0}});
    auto Q = upper({{0, 0}, {0, 2}});
    auto S = minkowski_sum(P, Q);
    // Oracle: pairwise sums with LP redundancy test.
    std::vector<Vec> sums;
    for (const auto& p : P.vertices)
        for (const auto& q : Q.vertices) sums.push_back(add(p, q));
    std::vector<Vec> expected;
    for (std::size_t i = 0; i < sums.size(); ++i) {
        std::vector<Vec> others;
        for (std::size_t j = 0; j < sums.size(); ++j)
            if (j != i && !has_point(others, sums[j]) && norm_inf(sub(sums[j], sums[i])) > 0)
                others.push_back(sums[j]);
        if (others.empty() || !redundant(sums[i], others, R2.generators())) expected.push_back(sums[i]);
    }
    REQUIRE(S.vertices.size() == expected.size());
    for (const auto& v : expected) CHECK(has_point(S.vertices, v));
    CHECK(has_point(S.vertices, {0, 0}));
    CHECK_FALSE(has_point(S.vertices, {2, 2}));
}

TEST_CASE("contains with tolerance band") {
    auto P = upper({{0, 0}});
    CHECK(P.contains(Vec{0, 0}, 0.0));
    CHECK_FALSE(P.contains(Vec{-1, 0}, 0.0));
    auto Q = upper({{1, 1}});
    CHECK(Q.contains(Vec{1, 1 - 1e-12}, 1e-9));
}

TEST_CASE("includes on translated orthants") {
    auto P = upper({{0, 0}});
    auto Q = upper({{1, 1}});
    CHECK(includes(P, P));
    CHECK(includes(P, Q));
    CHECK_FALSE(includes(Q, P));
}

TEST_CASE("vertex enumeration of the orthant") {
    auto v = vertex_enum(2, {{{1, 0}, 0}, {{0, 1}, 0}}, R2);
    REQUIRE(v.vertices.size() == 1);
    CHECK(has_point(v.vertices, {0, 0}));
    CHECK(v.directions.size() == 2);
    CHECK(has_point(v.directions, {1, 0}));
    CHECK(has_point(v.directions, {0, 1}));
}

TEST_CASE("vertex enumeration of a cut orthant") {
    double r = 1 / std::sqrt(2.0);
    auto v = vertex_enum(2, {{{r, r}, r}, {{1, 0}, 0}, {{0, 1}, 0}}, R2);
    REQUIRE(v.vertices.size() == 2);
    CHECK(has_point(v.vertices, {1, 0}));
    CHECK(has_point(v.vertices, {0, 1}));
}

TEST_CASE("vertex enumeration errors") {
    CHECK_THROWS_AS(vertex_enum(2, {{{1, 0}, 1}, {{-1, 0}, 0}}, R2), InfeasibleError);
    // Half-plane x1 >= 0 recedes along -e2, outside the orthant.
    CHECK_THROWS_AS(vertex_enum(2, {{{1, 0}, 0}, {{1, 1}, 0}}, R2), DegenerateError);
}

TEST_CASE("random upper sets in the plane agree with grid sampling") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        auto H = random_upper_halfspaces(rng, 2, 5);
        auto v = vertex_enum(2, H, R2);
        for (const auto& x : v.vertices) {
            int tight = 0;
            for (const auto& h : H) {
                CHECK(dot(h.normal, x) >= h.offset - 1e-9);
                if (std::abs(dot(h.normal, x) - h.offset) < 1e-9) ++tight;
            }
            CHECK(tight >= 2);
        }
        auto P = from_halfspaces(2, H, R2);
        for (double a = -8; a <= 4; a += 0.25)
            for (double b = -8; b <= 4; b += 0.25) {
                Vec x{a, b};
                bool in_h = true;
                for (const auto& h : H) in_h = in_h && dot(h.normal, x) >= h.offset - 1e-12;
                bool margin = true;
                for (const auto& h : H) margin = margin && std::abs(dot(h.normal, x) - h.offset) > 1e-6;
                if (margin) CHECK(P.contains(x, 0.0) == in_h);
            }
    }
}

TEST_CASE("random upper sets in three dimensions match brute-force enumeration") {
    std::mt19937_64 rng(5);
    auto R3 = OrderingCone::orthant(3);
    for (int trial = 0; trial < 30; ++trial) {
        auto H = random_upper_halfspaces(rng, 3, 6);
        auto v = vertex_enum(3, H, R3);
        auto brute = brute_vertices(H, 3);
        CHECK(v.vertices.size() == brute.size());
        for (const auto& b : brute) CHECK(has_point(v.vertices, b, 1e-7));
    }
}

TEST_CASE("round trip between representations") {
    std::mt19937_64 rng(9);
    for (std::size_t d : {2u, 3u, 4u}) {
        auto cone = OrderingCone::orthant(d);
        for (int trial = 0; trial < 10; ++trial) {
            auto H = random_upper_halfspaces(rng, d, 6);
            auto P = from_halfspaces(d, H, cone);
            auto Q = from_points(d, P.vertices, cone, P.directions);
            CHECK(equal(P, Q));
            Polyhedron Hset;
            Hset.dim = d;
            Hset.halfspaces = H;
            Hset.vertices = P.vertices;
            Hset.directions = P.directions;
            CHECK(includes(P, Hset));
            CHECK(includes(Hset, P));
        }
    }
}

TEST_CASE("minkowski sum is commutative and associative") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> U(-2, 2);
    for (int trial = 0; trial < 10; ++trial) {
        auto rnd = [&] {
            std::vector<Vec> pts(4);
            for (auto& p : pts) p = {U(rng), U(rng), U(rng)};
            return upper(pts, 3);
        };
        auto A = rnd(), B = rnd(), C = rnd();
        CHECK(equal(minkowski_sum(A, B), minkowski_sum(B, A)));
        CHECK(equal(minkowski_sum(minkowski_sum(A, B), C), minkowski_sum(A, minkowski_sum(B, C))));
    }
}

TEST_CASE("strict shift along an interior direction") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        auto P = from_halfspaces(2, random_upper_halfspaces(rng, 2, 4), R2);
        Vec m = R2.interior_direction();
        auto Q = translate(P, scale(m, 0.01));
        CHECK(includes(P, Q));
        CHECK_FALSE(includes(Q, P));
    }
}

TEST_CASE("cone with a line keeps paired directions") {
    // Frictionless exchange at price 100: K = {x : x0 + 100 x1 >= 0}.
    auto K = OrderingCone::from_generators(2, {{100, -1}, {-100, 1}, {1, 0}, {0, 1}});
    REQUIRE(K.dual_generators().size() == 1);
    CHECK(K.dual_generators()[0][0] == Catch::Approx(0.01));
    CHECK(K.dual_generators()[0][1] == Catch::Approx(1.0));
    CHECK(K.has_lines());
    auto P = shifted_cone(Vec{5, 0}, K);
    CHECK(P.halfspaces.size() == 1);
    CHECK(P.contains(Vec{5 - 100, 1}));
    CHECK_FALSE(P.contains(Vec{4, 0}));
    auto v = vertex_enum(2, P.halfspaces, K);
    CHECK(v.vertices.size() == 1);
}

TEST_CASE("proportional cost cone duals") {
    auto K = OrderingCone::from_generators(2, {{130, -1}, {-70, 1}, {1, 0}, {0, 1}});
    for (const auto& w : K.dual_generators())
        for (const auto& g : K.generators()) CHECK(dot(w, g) >= -1e-12);
    CHECK(K.generators().size() == 2);
    CHECK(K.dual_generators().size() == 2);
}

TEST_CASE("json round trip") {
    auto P = upper({{0, 1}, {1, 0}});
    auto j = nlohmann::json::parse(to_json(P));
    auto Q = polyhedron_from_json(j);
    CHECK(equal(P, Q, 0.0));
}
