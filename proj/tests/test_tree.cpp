#include <catch2/catch_amalgamated.hpp>
#include <numbers>
#include <random>

#include "setrisk/tree.hpp"

using namespace setrisk;
using namespace setrisk::tree;

namespace {

TreeParams single(std::size_t n, double nu, std::size_t T) {
    TreeParams p;
    p.d = 2;
    p.T = T;
    p.n = n;
    p.nu = nu;
    p.mu = {0.1};
    p.sigma = {0.3};
    p.S0 = {100};
    p.r = 0.1;
    return p;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("scenario grids") {
    auto a = scenario_set(2, 1.0, 2);
    REQUIRE(a.size() == 2);
    CHECK(a[0][0] == -1.0);
    CHECK(a[1][0] == 1.0);
    auto b = scenario_set(5, 2.0, 2);
    REQUIRE(b.size() == 5);
    for (int j = 0; j < 5; ++j) CHECK(b[j][0] == Catch::Approx(-2.0 + j).margin(1e-15));
    auto c = scenario_set(2, 1.0, 3);
    REQUIRE(c.size() == 4);
    for (const auto& e : c) CHECK(std::abs(e[0]) == 1.0);
    for (const auto& e : c) CHECK(std::abs(e[1]) == 1.0);
}

TEST_CASE("one-dimensional box probabilities") {
    auto p2 = box_probabilities(2, 1.0, {{1.0}});
    CHECK(p2[0] == Catch::Approx(0.5).margin(1e-15));
    auto p3 = box_probabilities(3, 1.0, {{1.0}});
    CHECK(p3[0] == Catch::Approx(normal_cdf(-0.5)).margin(1e-14));
    CHECK(p3[1] == Catch::Approx(normal_cdf(0.5) - normal_cdf(-0.5)).margin(1e-14));
    CHECK(p3[2] == Catch::Approx(1 - normal_cdf(0.5)).margin(1e-14));
    CHECK(p3[0] == Catch::Approx(0.3085).margin(1e-4));
    CHECK(p3[1] == Catch::Approx(0.3829).margin(1e-4));
}

TEST_CASE("bivariate quadrant masses") {
    auto p = box_probabilities(2, 1.0, {{1, 0.5}, {0.5, 1}});
    REQUIRE(p.size() == 4);
    double same = 0.25 + std::asin(0.5) / (2 * std::numbers::pi);
    CHECK(p[0] == Catch::Approx(same).margin(1e-12));
    CHECK(p[3] == Catch::Approx(same).margin(1e-12));
    CHECK(p[1] == Catch::Approx(0.5 - same).margin(1e-12));
    CHECK(p[0] == Catch::Approx(1.0 / 3).margin(1e-12));
    CHECK_THROWS_AS(box_probabilities(2, 1.0, Mat(3, Vec(3, 0.0))), UnsupportedError);
}

TEST_CASE("bivariate boxes agree with Monte Carlo") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> N;
    const double rho = -0.3;
    auto p = box_probabilities(3, 1.0, {{1, rho}, {rho, 1}});
    std::vector<double> counts(9, 0.0);
    const int draws = 400000;
    auto bin = [](double x) { return x <= -0.5 ? 0 : (x <= 0.5 ? 1 : 2); };
    for (int i = 0; i < draws; ++i) {
        double a = N(rng), b = rho * a + std::sqrt(1 - rho * rho) * N(rng);
        counts[bin(a) * 3 + bin(b)] += 1;
    }
    for (int s = 0; s < 9; ++s) CHECK(p[s] == Catch::Approx(counts[s] / draws).margin(4e-3));
}

TEST_CASE("probabilities are positive and normalized") {
    for (std::size_t n : {2u, 3u, 7u, 25u}) {
        auto p = box_probabilities(n, 2.0, {{1.0}});
        double s = 0;
        for (double v : p) {
            CHECK(v > 0);
            s += v;
        }
        CHECK(std::abs(s - 1.0) <= 1e-12);
    }
}

TEST_CASE("lattice shape and recombination") {
    auto tree = build_tree(single(2, 1.0, 3));
    CHECK(tree.slices[2].size() == 3);
    for (std::size_t t = 0; t <= 3; ++t) CHECK(tree.slices[t].size() == t + 1);
    std::size_t ud = tree.follow(std::vector<std::size_t>{1, 0});
    std::size_t du = tree.follow(std::vector<std::size_t>{0, 1});
    CHECK(ud == du);

    TreeParams q = single(3, 1.0, 2);
    q.d = 3;
    q.mu = {0.1, 0.2};
    q.sigma = {0.3, 0.4};
    q.S0 = {1, 2};
    q.rho = {{1, 0.2}, {0.2, 1}};
    auto t3 = build_tree(q);
    CHECK(t3.slices[2].size() == 25);
    // Scenario (0,2) then (2,0) lands on the same node as (1,1) twice.
    std::size_t a = t3.follow(std::vector<std::size_t>{2, 6});
    std::size_t b = t3.follow(std::vector<std::size_t>{4, 4});
    CHECK(a == b);
    for (const auto& nd : t3.nodes) {
        double s = 0;
        for (const auto& c : nd.successors) s += c.prob;
        if (!nd.successors.empty()) CHECK(std::abs(s - 1) <= 1e-12);
        for (double S : nd.S) CHECK(S > 0);
    }
}

TEST_CASE("prices follow the exact GBM exponent") {
    auto p = single(5, 2.0, 4);
    auto tree = build_tree(p);
    double dt = p.dt();
    const auto& root = tree.node(tree.root());
    for (std::size_t c = 0; c < 5; ++c) {
        const auto& ch = tree.node(root.successors[c].node);
        double e = -2.0 + c;
        double expect = 100 * std::exp((0.1 - 0.045) * dt + 0.3 * std::sqrt(dt) * e);
        CHECK(ch.S[0] == Catch::Approx(expect).epsilon(1e-14));
        CHECK(ch.B == Catch::Approx(std::exp(0.1 * dt)).epsilon(1e-15));
    }
    p.compounding = Compounding::simple;
    auto ts = build_tree(p);
    CHECK(ts.node(ts.slices[4][0]).B == Catch::Approx(1.1).epsilon(1e-15));
}

TEST_CASE("bid and ask spreads") {
    auto p = single(25, 2.0, 9);
    p.r = 0.10;
    p.mu = {0.125};
    p.sigma = {0.5};
    p.gamma = {0.3};
    auto tree = build_tree(p);
    const auto& root = tree.node(tree.root());
    CHECK(root.ask[0] == Catch::Approx(130).epsilon(1e-15));
    CHECK(root.bid[0] == Catch::Approx(70).epsilon(1e-15));
    for (const auto& nd : tree.nodes) CHECK((nd.bid[0] <= nd.S[0] && nd.S[0] <= nd.ask[0]));
    p.gamma = {0.0};
    auto flat = build_tree(p);
    for (const auto& nd : flat.nodes) CHECK((nd.bid[0] == nd.S[0] && nd.ask[0] == nd.S[0]));
}

TEST_CASE("discounted mid price is close to a martingale when mu equals r") {
    for (auto [n, nu, tol] : {std::tuple{2u, 1.0, 0.10}, {5u, 2.0, 0.02}, {25u, 2.0, 0.02}}) {
        auto p = single(n, nu, 4);
        p.mu = {p.r};
        auto tree = build_tree(p);
        for (std::size_t t = 0; t < 4; ++t)
            for (std::size_t id : tree.slices[t]) {
                const auto& nd = tree.node(id);
                double e = 0;
                for (const auto& c : nd.successors) e += c.prob * tree.node(c.node).S[0] / tree.node(c.node).B;
                CHECK(std::abs(e / (nd.S[0] / nd.B) - 1) <= tol);
            }
    }
}

TEST_CASE("parameter validation") {
    auto p = single(2, 1.0, 1);
    p.sigma = {0.0};
    CHECK_THROWS_AS(build_tree(p), ValidationError);
    p = single(2, 1.0, 1);
    p.n = 1;
    CHECK_THROWS_AS(build_tree(p), ValidationError);
    p = single(2, 1.0, 1);
    p.mu = {1e6};
    CHECK_THROWS_AS(build_tree(p), ValidationError);
    TreeParams q = single(2, 1.0, 1);
    q.d = 3;
    q.mu = {0.1, 0.1};
    q.sigma = {0.2, 0.2};
    q.S0 = {1, 1};
    q.rho = {{1, 2}, {2, 1}};
    CHECK_THROWS_AS(build_tree(q), ValidationError);
}

TEST_CASE("tree json dump parses") {
    auto tree = build_tree(single(3, 1.0, 2));
    auto j = nlohmann::json::parse(to_json(tree));
    CHECK(j["nodes"].size() == tree.nodes.size());
    CHECK(j["nodes"][0]["successors"].size() == 3);
}
