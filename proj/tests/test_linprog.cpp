#include <array>

#include "doctest.h"
#include "support.hpp"

#include "kdmdp/linprog.hpp"

using namespace kdmdp;
using namespace kdmdp::testing;

namespace {

double row_min(const WitnessLp& lp, Point x) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < lp.rows(); ++k) {
        double v = lp.offset(k);
        for (int i = 0; i < lp.dims(); ++i) v += lp.gradient(k)[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
        m = std::min(m, v);
    }
    return m;
}

void check_solution(const WitnessLp& lp, const WitnessSolution& sol) {
    REQUIRE(sol.status == LpStatus::optimal);
    REQUIRE(sol.point.size() == static_cast<std::size_t>(lp.dims()));
    for (int i = 0; i < lp.dims(); ++i) {
        CHECK(sol.point[static_cast<std::size_t>(i)] >= lp.low()[static_cast<std::size_t>(i)] - 1e-9);
        CHECK(sol.point[static_cast<std::size_t>(i)] <= lp.high()[static_cast<std::size_t>(i)] + 1e-9);
    }
    CHECK(row_min(lp, sol.point) >= sol.margin - 1e-9);
}

} // namespace

TEST_CASE("constant row") {
    WitnessLp lp(Rect::unit(2));
    lp.add_row(std::array{0.0, 0.0}, 5.0);
    const auto sol = solve_witness(lp);
    check_solution(lp, sol);
    CHECK(sol.margin == doctest::Approx(5.0));
}

TEST_CASE("difference of x and 1 - x peaks at the corner") {
    WitnessLp lp(Rect::unit(1));
    lp.add_row(std::array{2.0}, -1.0);
    const auto sol = solve_witness(lp);
    check_solution(lp, sol);
    CHECK(sol.margin == doctest::Approx(1.0));
    CHECK(sol.point[0] == doctest::Approx(1.0));
}

TEST_CASE("tent has its apex inside the box") {
    WitnessLp lp(Rect::unit(1));
    lp.add_row(std::array{1.0}, 0.0);
    lp.add_row(std::array{-1.0}, 1.0);
    const auto sol = solve_witness(lp);
    check_solution(lp, sol);
    CHECK(sol.margin == doctest::Approx(0.5));
    CHECK(sol.point[0] == doctest::Approx(0.5));
}

TEST_CASE("invalid input") {
    WitnessLp empty(Rect::unit(1));
    CHECK_THROWS_AS(solve_witness(empty), DomainError);
    CHECK_THROWS_AS(WitnessLp(std::array{0.5}, std::array{0.5}), DomainError);
}

TEST_CASE("random LPs against a dense grid") {
    Rng g(12);
    for (int t = 0; t < 60; ++t) {
        const int d = uniform_int(g, 1, 2);
        std::vector<double> lo(static_cast<std::size_t>(d)), hi(static_cast<std::size_t>(d));
        for (std::size_t k = 0; k < lo.size(); ++k) {
            lo[k] = uniform(g, 0.0, 0.5);
            hi[k] = uniform(g, lo[k] + 0.05, 1.0);
        }
        WitnessLp lp(lo, hi);
        const int rows = uniform_int(g, 1, 30);
        std::vector<double> grad(static_cast<std::size_t>(d));
        for (int r = 0; r < rows; ++r) {
            for (auto& c : grad) c = uniform(g, -0.25, 0.25);
            lp.add_row(grad, uniform(g, -0.1, 0.1));
        }
        const auto sol = solve_witness(lp);
        check_solution(lp, sol);
        const int n = 200;
        double best = -std::numeric_limits<double>::infinity();
        std::vector<double> x(static_cast<std::size_t>(d));
        for (int i = 0; i < n; ++i) {
            x[0] = lo[0] + (hi[0] - lo[0]) * i / (n - 1);
            if (d == 1) {
                best = std::max(best, row_min(lp, x));
                continue;
            }
            for (int j = 0; j < n; ++j) {
                x[1] = lo[1] + (hi[1] - lo[1]) * j / (n - 1);
                best = std::max(best, row_min(lp, x));
            }
        }
        CHECK(best <= sol.margin + 1e-9);
        CHECK(sol.margin - best <= 2e-3);
    }
}

TEST_CASE("deterministic") {
    Rng g(13);
    WitnessLp lp(Rect::unit(3));
    for (int r = 0; r < 20; ++r) {
        std::array<double, 3> grad{uniform(g, -1, 1), uniform(g, -1, 1), uniform(g, -1, 1)};
        lp.add_row(grad, uniform(g, -1, 1));
    }
    const auto a = solve_witness(lp);
    const auto b = solve_witness(lp);
    CHECK(a.margin == b.margin);
    CHECK(a.point == b.point);
    CHECK(a.iterations == b.iterations);
}
