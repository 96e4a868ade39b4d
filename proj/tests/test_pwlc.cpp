#include <array>

#include "doctest.h"
#include "support.hpp"

using namespace kdmdp;
using namespace kdmdp::testing;

namespace {

double max_of(const PwlcSet& s, Point x) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s.size(); ++i) {
        double v = s.offset(i);
        for (int k = 0; k < s.dims(); ++k) v += s.coeffs(i)[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(k)];
        best = std::max(best, v);
    }
    return best;
}

Rect random_box(Rng& g, int d) {
    std::vector<double> lo(static_cast<std::size_t>(d)), hi(static_cast<std::size_t>(d));
    for (std::size_t k = 0; k < lo.size(); ++k) {
        const double a = uniform(g), b = uniform(g);
        lo[k] = std::min(a, b);
        hi[k] = std::max(std::max(a, b), lo[k] + 1e-3);
        if (hi[k] > 1.0) lo[k] = (hi[k] = 1.0) - 1e-3;
    }
    return Rect(lo, hi);
}

PwlcSet fns1(std::initializer_list<std::pair<double, double>> fs) {
    std::vector<LinearFn> v;
    for (auto [c, b] : fs) v.push_back({{c}, b});
    return PwlcSet(1, v);
}

} // namespace

TEST_CASE("eval") {
    CHECK(eval(PwlcSet::constant(2, 5.0), std::array{0.3, 0.9}).value == 5.0);
    const auto s = fns1({{1.0, 0.0}, {-1.0, 1.0}});
    const auto r = eval(s, std::array{0.25});
    CHECK(r.value == 0.75);
    CHECK(r.index == 1);
    CHECK(eval(s, std::array{0.5}).index == 0);  // tie goes to the lowest index

    Rng g(1);
    const auto big = random_pwlc(g, 3, 20, 2.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const auto x = random_point_in(g, Rect::unit(3), 0.0);
        CHECK(eval(big, x).value == max_of(big, x));
        const auto e = eval(big, x);
        for (std::size_t j = 0; j < e.index; ++j) CHECK(big.value(j, x) < e.value);
    }
}

TEST_CASE("cross_sum") {
    Rng g(2);
    const auto b = random_pwlc(g, 2, 4, 1.0, 1.0);
    const auto z = cross_sum(PwlcSet::zero(2), b);
    for (int i = 0; i < 100; ++i) {
        const auto x = random_point_in(g, Rect::unit(2), 0.0);
        CHECK(eval(z, x).value == doctest::Approx(eval(b, x).value).epsilon(1e-15));
    }
    const auto one = cross_sum(fns1({{1.0, 0.0}}), fns1({{0.0, 1.0}}));
    REQUIRE(one.size() == 1);
    CHECK(one.coeffs(0)[0] == 1.0);
    CHECK(one.offset(0) == 1.0);

    const auto p = random_pwlc(g, 3, 5, 1.0, 1.0);
    const auto q = random_pwlc(g, 3, 7, 1.0, 1.0);
    const auto r = random_pwlc(g, 3, 3, 1.0, 1.0);
    const auto pq = cross_sum(p, q);
    CHECK(pq.size() == 35);
    const auto qp = cross_sum(q, p);
    const auto pq_r = cross_sum(pq, r);
    const auto p_qr = cross_sum(p, cross_sum(q, r));
    for (int i = 0; i < 1000; ++i) {
        const auto x = random_point_in(g, Rect::unit(3), 0.0);
        const double want = eval(p, x).value + eval(q, x).value;
        CHECK(std::abs(eval(pq, x).value - want) <= 1e-12);
        CHECK(std::abs(eval(qp, x).value - want) <= 1e-12);
        CHECK(std::abs(eval(pq_r, x).value - eval(p_qr, x).value) <= 1e-12);
    }
}

TEST_CASE("union_max") {
    Rng g(3);
    const auto s = random_pwlc(g, 2, 6, 1.0, 1.0);
    const auto ss = union_max(s, s);
    CHECK(ss.size() == s.size());
    const auto dom = prune(union_max(PwlcSet::zero(2), PwlcSet::constant(2, -1.0)), Rect::unit(2));
    REQUIRE(dom.size() == 1);
    CHECK(dom.offset(0) == 0.0);

    const auto a = random_pwlc(g, 3, 5, 1.0, 1.0);
    const auto b = random_pwlc(g, 3, 8, 1.0, 1.0);
    const auto ab = union_max(a, b);
    const auto ba = union_max(b, a);
    for (int i = 0; i < 1000; ++i) {
        const auto x = random_point_in(g, Rect::unit(3), 0.0);
        const double want = std::max(eval(a, x).value, eval(b, x).value);
        CHECK(eval(ab, x).value == want);
        CHECK(eval(ba, x).value == want);
        CHECK(eval(ss, x).value == eval(s, x).value);
    }
}

TEST_CASE("scale") {
    Rng g(4);
    const auto s = random_pwlc(g, 2, 5, 1.0, 1.0);
    CHECK(scale(s, 1.0) == s);
    const auto z = scale(s, 0.0);
    REQUIRE(z.size() == 1);
    CHECK(z.is_constant());
    CHECK(z.offset(0) == 0.0);
    CHECK_THROWS_AS(scale(s, -0.5), DomainError);
    const auto h = scale(s, 0.8);
    for (int i = 0; i < 1000; ++i) {
        const auto x = random_point_in(g, Rect::unit(2), 0.0);
        CHECK(std::abs(eval(h, x).value - 0.8 * eval(s, x).value) <= 1e-12);
        // Positive scaling keeps the argmax.
        CHECK(eval(scale(s, 3.5), x).index == eval(s, x).index);
    }
}

TEST_CASE("pull_back") {
    Rng g(5);
    const auto s = random_pwlc(g, 2, 4, 1.0, 1.0);
    const std::array delta{0.1, -0.3};
    const auto p = pull_back(s, delta);
    for (int i = 0; i < 200; ++i) {
        const auto x = random_point_in(g, Rect::unit(2), 0.0);
        const std::array y{x[0] + delta[0], x[1] + delta[1]};
        CHECK(std::abs(eval(p, x).value - eval(s, y).value) <= 1e-12);
    }
}

TEST_CASE("pointwise_dominates and min_difference") {
    const LinearFn half{{0.0}, 0.5}, id{{1.0}, 0.0};
    CHECK(pointwise_dominates(id, id, Rect::unit(1)));
    CHECK_FALSE(pointwise_dominates(half, id, Rect::unit(1)));

    Rng g(6);
    for (int t = 0; t < 500; ++t) {
        const int d = uniform_int(g, 1, 3);
        const auto pair = random_pwlc(g, d, 2, 1.0, 0.5);
        const Rect r = random_box(g, d);
        double corner_min = std::numeric_limits<double>::infinity();
        std::vector<double> x(static_cast<std::size_t>(d));
        for (int mask = 0; mask < (1 << d); ++mask) {
            for (int k = 0; k < d; ++k) x[static_cast<std::size_t>(k)] = (mask >> k) & 1 ? r.high(k) : r.low(k);
            corner_min = std::min(corner_min, pair.value(0, x) - pair.value(1, x));
        }
        CHECK(std::abs(min_difference(pair.fn(0), pair.fn(1), r) - corner_min) <= 1e-12);
        if (std::abs(corner_min) > 1e-12) CHECK(pointwise_dominates(pair.fn(0), pair.fn(1), r) == (corner_min >= 0.0));
    }
}

TEST_CASE("prune") {
    SUBCASE("constant dominance") {
        const auto p = prune(fns1({{0.0, 0.0}, {0.0, -1.0}}), Rect::unit(1));
        REQUIRE(p.size() == 1);
        CHECK(p.offset(0) == 0.0);
    }
    SUBCASE("a plateau under a valley") {
        const auto p = prune(fns1({{1.0, 0.0}, {-1.0, 1.0}, {0.0, 0.4}}), Rect::unit(1));
        REQUIRE(p.size() == 2);
        CHECK(p.coeffs(0)[0] == 1.0);
        CHECK(p.coeffs(1)[0] == -1.0);
        // max(x, 1 - x) bottoms out at 0.5 > 0.4.
        double lowest = 1.0;
        for (int i = 0; i <= 1000; ++i) lowest = std::min(lowest, std::max(i / 1000.0, 1.0 - i / 1000.0));
        CHECK(lowest == 0.5);
    }
    SUBCASE("plateau survives when it pokes out") {
        const auto p = prune(fns1({{1.0, 0.0}, {-1.0, 1.0}, {0.0, 0.6}}), Rect::unit(1));
        CHECK(p.size() == 3);
    }
    SUBCASE("duplicates keep the earlier member") {
        const auto p = prune(fns1({{0.5, 0.1}, {0.5, 0.1}, {0.0, 0.0}}), Rect::unit(1));
        REQUIRE(p.size() == 1);
        CHECK(prune_indices(fns1({{0.5, 0.1}, {0.5, 0.1}}), Rect::unit(1)) == std::vector<std::size_t>{0});
    }
    SUBCASE("random 50-function sets are pointwise sound and idempotent") {
        Rng g(7);
        for (int t = 0; t < 20; ++t) {
            const int d = uniform_int(g, 1, 3);
            const auto s = random_pwlc(g, d, 50, 1.0, 1.0);
            const Rect r = t % 2 ? Rect::unit(d) : random_box(g, d);
            const auto p = prune(s, r);
            CHECK(p.size() <= s.size());
            CHECK(prune(p, r).size() == p.size());
            for (int i = 0; i < 10000; ++i) {
                const auto x = random_point_in(g, r, 0.0);
                REQUIRE(std::abs(eval(p, x).value - eval(s, x).value) <= 1e-7);
            }
        }
    }
}

TEST_CASE("approx_equal") {
    const auto a = fns1({{1.0, 0.0}, {0.0, 0.5}});
    CHECK(approx_equal(a, a));
    CHECK(approx_equal(a, fns1({{1.0 + 1e-14, 0.0}, {0.0, 0.5}})));
    CHECK_FALSE(approx_equal(a, fns1({{1.0, 0.0}})));
    CHECK_FALSE(approx_equal(a, fns1({{1.0, 1e-6}, {0.0, 0.5}})));
}
