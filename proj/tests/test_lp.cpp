#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "setrisk/lp.hpp"

using namespace setrisk;
using lp::Relation;
using Catch::Approx;

namespace {

// Primal feasibility, complementary slackness and zero duality gap.
void check_certificate(const lp::LinearProgram& prog, const lp::Result& r) {
    REQUIRE(r.optimal());
    double dual_value = 0.0;
    Vec grad(prog.num_vars, 0.0);
    for (std::size_t i = 0; i < prog.constraints.size(); ++i) {
        const auto& c = prog.constraints[i];
        double ax = dot(c.row, r.x);
        double y = r.duals[i];
        switch (c.rel) {
            case Relation::GreaterEqual:
                CHECK(ax >= c.rhs - 1e-9 * std::max(1.0, std::abs(c.rhs)));
                CHECK(y >= -1e-9);
                break;
            case Relation::LessEqual:
                CHECK(ax <= c.rhs + 1e-9 * std::max(1.0, std::abs(c.rhs)));
                CHECK(y <= 1e-9);
                break;
            case Relation::Equal:
                CHECK(std::abs(ax - c.rhs) <= 1e-9 * std::max(1.0, std::abs(c.rhs)));
                break;
        }
        CHECK(std::abs(y * (ax - c.rhs)) <= 1e-7);
        dual_value += y * c.rhs;
        for (auto [j, v] : c.row) grad[j] += y * v;
    }
    for (std::size_t k = 0; k < prog.num_vars; ++k) {
        double yb = r.bound_duals[k];
        if (yb > 0) dual_value += yb * prog.lower[k];
        if (yb < 0) dual_value += yb * prog.upper[k];
        grad[k] += yb;
    }
    for (std::size_t k = 0; k < prog.num_vars; ++k) CHECK(grad[k] == Approx(prog.objective[k]).margin(1e-7));
    CHECK(std::abs(r.value - dual_value) <= 1e-6 * (1 + std::abs(r.value)));
}

}  // namespace

TEST_CASE("single lower bound row") {
    lp::LinearProgram p;
    p.add_variable(-lp::kInf, lp::kInf, 1.0);
    p.add({{0, 1.0}}, Relation::GreaterEqual, 3.0);
    auto r = lp::solve(p);
    REQUIRE(r.optimal());
    CHECK(r.x[0] == Approx(3.0));
    CHECK(r.value == Approx(3.0));
    CHECK(r.duals[0] == Approx(1.0));
}

TEST_CASE("contradictory bounds are infeasible") {
    lp::LinearProgram p;
    p.add_variable(0.0, lp::kInf, 1.0);
    p.add({{0, 1.0}}, Relation::LessEqual, -1.0);
    CHECK(lp::solve(p).status == lp::Status::Infeasible);
}

TEST_CASE("simplex edge optimum") {
    lp::LinearProgram p;
    p.add_variable(0.0, lp::kInf, -1.0);
    p.add_variable(0.0, lp::kInf, -1.0);
    p.add({{0, 1.0}, {1, 1.0}}, Relation::LessEqual, 1.0);
    auto r = lp::solve(p);
    REQUIRE(r.optimal());
    CHECK(r.value == Approx(-1.0));
    CHECK(r.x[0] + r.x[1] == Approx(1.0));
    check_certificate(p, r);
}

TEST_CASE("unbounded objective") {
    lp::LinearProgram p;
    p.add_variable(0.0, lp::kInf, -1.0);
    p.add_variable(0.0, lp::kInf, 0.0);
    p.add({{0, 1.0}, {1, -1.0}}, Relation::LessEqual, 1.0);
    CHECK(lp::solve(p).status == lp::Status::Unbounded);
}

TEST_CASE("equality constrained transport") {
    // 2 sources (supply 3, 4), 2 sinks (demand 5, 2).
    lp::LinearProgram p;
    double cost[4] = {1, 4, 2, 1};
    for (double c : cost) p.add_variable(0.0, lp::kInf, c);
    p.add({{0, 1}, {1, 1}}, Relation::Equal, 3);
    p.add({{2, 1}, {3, 1}}, Relation::Equal, 4);
    p.add({{0, 1}, {2, 1}}, Relation::Equal, 5);
    p.add({{1, 1}, {3, 1}}, Relation::Equal, 2);
    auto r = lp::solve(p);
    REQUIRE(r.optimal());
    CHECK(r.value == Approx(3 * 1 + 2 * 2 + 2 * 1));
    check_certificate(p, r);
}

TEST_CASE("warm start after objective change") {
    lp::LinearProgram p;
    p.add_variable();
    p.add_variable();
    p.add({{0, 2}, {1, 1}}, Relation::GreaterEqual, 2);
    p.add({{0, 1}, {1, 2}}, Relation::GreaterEqual, 2);
    p.add({{0, 1}}, Relation::GreaterEqual, 0);
    p.add({{1, 1}}, Relation::GreaterEqual, 0);
    lp::Solver s(p);
    Vec c1{1, 0}, c2{0, 1}, c3{1, 1};
    s.set_objective(c1);
    CHECK(s.solve().value == Approx(0.0));
    s.set_objective(c2);
    CHECK(s.resolve().value == Approx(0.0));
    s.set_objective(c3);
    auto r = s.resolve();
    CHECK(r.value == Approx(4.0 / 3.0));
}

TEST_CASE("random feasible programs satisfy the optimality certificate") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 2 + rng() % 8, m = n + rng() % 20;
        Vec x0(n);
        for (auto& v : x0) v = U(rng) * 5;
        lp::LinearProgram p;
        for (std::size_t k = 0; k < n; ++k) p.add_variable(-10.0, 10.0, U(rng));
        for (std::size_t i = 0; i < m; ++i) {
            SparseVec row;
            for (std::size_t k = 0; k < n; ++k)
                if (rng() % 3) row.emplace_back(k, std::round(U(rng) * 4));
            double ax = dot(row, x0);
            int kind = static_cast<int>(rng() % 5);
            if (kind == 0)
                p.add(row, Relation::Equal, ax);
            else if (kind < 3)
                p.add(row, Relation::GreaterEqual, ax - std::abs(U(rng)) * (rng() % 2));
            else
                p.add(row, Relation::LessEqual, ax + std::abs(U(rng)) * (rng() % 2));
        }
        auto r = lp::solve(p);
        INFO("trial " << trial);
        check_certificate(p, r);
        auto r2 = lp::solve(p);
        CHECK(r2.value == r.value);
    }
}

TEST_CASE("random infeasible programs are detected") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = 2 + rng() % 5;
        lp::LinearProgram p;
        for (std::size_t k = 0; k < n; ++k) p.add_variable(-lp::kInf, lp::kInf, U(rng));
        SparseVec row;
        for (std::size_t k = 0; k < n; ++k) row.emplace_back(k, U(rng));
        p.add(row, Relation::GreaterEqual, 1.0);
        p.add(row, Relation::LessEqual, 0.5);
        CHECK(lp::solve(p).status == lp::Status::Infeasible);
    }
}
