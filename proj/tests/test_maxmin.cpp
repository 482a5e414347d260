#include "doctest.h"

#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "suphedge/errors.hpp"
#include "suphedge/maxmin.hpp"

using namespace suphedge;

namespace {

std::vector<Vec> pts1(std::initializer_list<double> ys) {
    std::vector<Vec> out;
    for (double y : ys) out.push_back({y});
    return out;
}

// one-step running-minimum node at s0 = 2 with support {0, 2, 4}
OneStepProblem running_min_node(const Utility& u, Vec prior) {
    OneStepProblem p;
    p.price = {2};
    p.support = pts1({0, 2, 4});
    for (double xi : {0.0, 2.0, 2.0}) p.continuation.push_back(ConcaveFunction::shifted_utility(u, xi));
    p.priors = {std::move(prior)};
    return p;
}

}  // namespace

TEST_CASE("maxmin: absorbing node splits the surplus") {
    const Utility u = Utility::exponential(0.8);
    OneStepProblem p;
    p.price = {3};
    p.support = {{3}};
    p.continuation = {ConcaveFunction::shifted_utility(u, 2.0)};
    p.priors = {{1.0}};
    p.consumption = &u;
    for (double x : {2.0, 3.0, 5.5, 12.0}) {
        const auto r = one_step_maxmin(p, x);
        REQUIRE(r.feasible);
        CHECK(r.converged);
        CHECK(r.value == doctest::Approx(2.0 * u.value((x - 2.0) / 2.0)).epsilon(1e-9));
        CHECK(r.consumption == doctest::Approx((x - 2.0) / 2.0).epsilon(1e-4));
    }
}

TEST_CASE("maxmin: point-mass prior on the flat successor") {
    const Utility u = Utility::exponential(1.0);
    const auto p = running_min_node(u, {0.0, 1.0, 0.0});
    std::set<double> hedges;
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        MaxminOptions opt;
        opt.seed = seed;
        const auto r = one_step_maxmin(p, 2.0, opt);
        REQUIRE(r.feasible);
        CHECK(r.value == doctest::Approx(u.value(0.0)).epsilon(1e-9));
        CHECK(r.hedge[0] >= -1e-9);
        CHECK(r.hedge[0] <= 1.0 + 1e-9);
        // gain on the only charged successor is zero
        CHECK(std::abs(r.successor_wealth[1] - 2.0) <= 1e-12);
        hedges.insert(std::round(r.hedge[0] * 1e6) / 1e6);
    }
    // seeds select different points of the optimal hedge interval
    CHECK(hedges.size() >= 2);
}

TEST_CASE("maxmin: infeasible and clamped wealth") {
    const Utility u = Utility::exponential(1.0);
    const auto p = running_min_node(u, {0.2, 0.5, 0.3});
    const auto low = one_step_maxmin(p, 1.5);
    CHECK_FALSE(low.feasible);
    CHECK(std::isinf(low.value));
    CHECK(low.value < 0.0);
    const auto edge = one_step_maxmin(p, 2.0 - 1e-13);
    CHECK(edge.feasible);
    CHECK(std::isfinite(edge.value));
}

TEST_CASE("maxmin: input validation") {
    CHECK_THROWS_AS(ConcaveFunction::interpolant({0, 1, 2}, {0, 1, 3}), ValidationError);
    CHECK_THROWS_AS(ConcaveFunction::interpolant({0, 1, 2}, {0, -1, -2}), ValidationError);
    CHECK_THROWS_AS(ConcaveFunction::interpolant({0, 0, 2}, {0, 1, 2}), ValidationError);
    const auto f = ConcaveFunction::interpolant({1, 2, 4}, {0, 1, 1.5});
    CHECK(f.value(0.5) == -INFINITY);
    CHECK(f.value(3.0) == doctest::Approx(1.25));
    CHECK(f.value(9.0) == doctest::Approx(1.5));
    CHECK(f.slope(9.0) == 0.0);
    CHECK(f.slope(1.0) == doctest::Approx(1.0));

    const Utility u = Utility::exponential(1.0);
    auto p = running_min_node(u, {0.5, 0.6, 0.0});
    CHECK_THROWS_AS(one_step_maxmin(p, 3.0), ValidationError);
    p.priors.clear();
    CHECK_THROWS_AS(one_step_maxmin(p, 3.0), ValidationError);
}

TEST_CASE("maxmin: span of increments") {
    const auto full = compactify({{-20}, {20}}, 1);
    CHECK(full.rank() == 1);
    CHECK(full.project(Vec{3.5})[0] == doctest::Approx(3.5));
    CHECK(compactify({{0, 0}, {0, 0}}, 2).rank() == 0);
    const auto diag = compactify({{1, 1}, {-1, -1}}, 2);
    REQUIRE(diag.rank() == 1);
    const Vec h = diag.project(Vec{1, 0});
    CHECK(h[0] == doctest::Approx(0.5));
    CHECK(h[1] == doctest::Approx(0.5));
}

TEST_CASE("maxmin: truncated non-closed prior family") {
    const Utility u = Utility::exponential(1.0);
    double previous = INFINITY;
    for (int N : {2, 4, 8, 16, 32}) {
        OneStepProblem p;
        p.price = {1, 1};
        p.support = {{0, 0}, {2, 0}, {0, 2}, {2, 2}};
        for (int n = 2; n <= N; ++n) p.support.push_back({n - 1.0 / n, n + 1.0 / n});
        for (const Vec& y : p.support) p.continuation.push_back(ConcaveFunction::shifted_utility(u, std::min(y[0], y[1])));
        for (int n = 1; n <= N; ++n) {
            Vec P(p.support.size(), 0.0);
            P[0] = 0.5;
            P[n == 1 ? 2 : static_cast<std::size_t>(n + 2)] = 0.5;
            p.priors.push_back(P);
        }
        const auto r = one_step_maxmin(p, 1.0);
        REQUIRE(r.feasible);
        CHECK(r.value == doctest::Approx(0.5 * u.value(2.0 / N)).epsilon(1e-8));
        CHECK(r.value < previous);
        previous = r.value;
        // hedges stay of the form (lambda, 1 - lambda)
        CHECK(r.hedge[0] + r.hedge[1] == doctest::Approx(1.0).epsilon(1e-8));
    }
    CHECK(previous < 0.5 * u.value(0.1) + 1e-12);
}

TEST_CASE("maxmin: random instances against nested golden sections") {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst_gap = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const Utility u = Utility::exponential(0.3 + 1.2 * U(rng));
        const Utility uc = Utility::exponential(0.3 + 1.2 * U(rng));
        const int n = 2 + static_cast<int>(rng() % 4);
        OneStepProblem p;
        p.price = {10};
        std::vector<double> ys, xis;
        ys.push_back(10.0 - 1.0 - 3.0 * U(rng));
        ys.push_back(10.0 + 1.0 + 3.0 * U(rng));
        for (int i = 2; i < n; ++i) ys.push_back(10.0 + 6.0 * (U(rng) - 0.5));
        for (double y : ys) {
            p.support.push_back({y});
            xis.push_back(3.0 * U(rng));
            p.continuation.push_back(ConcaveFunction::shifted_utility(u, xis.back()));
        }
        const int K = 1 + static_cast<int>(rng() % 3);
        for (int k = 0; k < K; ++k) {
            Vec P(ys.size());
            double mass = 0.0;
            for (auto& q : P) mass += (q = U(rng) + 0.05);
            for (auto& q : P) q /= mass;
            p.priors.push_back(P);
        }
        const bool consume = trial % 2 == 1;
        if (consume) p.consumption = &uc;

        std::vector<double> lows;
        for (double xi : xis) lows.push_back(xi);
        const double required = oracle::envelope_1d(ys, lows, 10.0);
        const double x = required + 0.2 + 3.0 * U(rng);

        oracle::ScalarNode node{10.0, ys, xis, [&](std::size_t i, double w) { return u.value(w - xis[i]); }, {}};
        if (consume) node.u = [&](double c) { return uc.value(c); };
        std::vector<std::vector<double>> priors(p.priors.begin(), p.priors.end());
        const double sup_inf = node.solve(x, priors);

        const auto r = one_step_maxmin(p, x);
        REQUIRE(r.feasible);
        CHECK(r.converged);
        CHECK(r.value == doctest::Approx(sup_inf).epsilon(1e-8));
        CHECK(r.gap >= -1e-8);
        CHECK(r.gap <= 1e-6);
        worst_gap = std::max(worst_gap, std::abs(r.gap));

        if (K == 2) {
            // inf over the segment of priors of the fixed-measure optimum
            const double inf_sup = -oracle::golden_max(
                [&](double lam) {
                    std::vector<double> mix(ys.size());
                    for (std::size_t i = 0; i < ys.size(); ++i) mix[i] = lam * priors[0][i] + (1 - lam) * priors[1][i];
                    return -node.solve(x, {mix});
                },
                0.0, 1.0, 60);
            CHECK(std::abs(inf_sup - sup_inf) <= 1e-6);
            CHECK(std::abs((r.value + r.gap) - inf_sup) <= 1e-6);
        }
        // the reported maximiser attains the value
        CHECK(maxmin_objective(p, x, r.hedge, r.consumption) == doctest::Approx(r.value).epsilon(1e-12));
    }
    MESSAGE("largest minimax gap: " << worst_gap);
}

TEST_CASE("maxmin: value is concave and non-decreasing in wealth") {
    const Utility u = Utility::power_bounded(2.0);
    OneStepProblem p;
    p.price = {5};
    p.support = pts1({3, 4.5, 7});
    for (double xi : {1.0, 0.5, 2.5}) p.continuation.push_back(ConcaveFunction::shifted_utility(u, xi));
    p.priors = {{0.3, 0.3, 0.4}, {0.6, 0.1, 0.3}};
    p.consumption = &u;
    Vec values;
    const double h = 0.25;
    for (int k = 0; k < 24; ++k) values.push_back(one_step_maxmin(p, 2.0 + h * k).value);
    for (std::size_t k = 1; k < values.size(); ++k) CHECK(values[k] >= values[k - 1] - 1e-10);
    for (std::size_t k = 1; k + 1 < values.size(); ++k)
        CHECK(values[k + 1] - 2.0 * values[k] + values[k - 1] <= 1e-8);
}

TEST_CASE("maxmin: concave monotone fit") {
    const Vec xs{0, 1, 2, 3, 4};
    const Vec vs{0, 1.0, 1.2, 2.2, 2.1};
    const Vec fit = concave_monotone_fit(xs, vs);
    for (std::size_t k = 0; k < xs.size(); ++k) CHECK(fit[k] >= vs[k] - 1e-15);
    for (std::size_t k = 1; k < xs.size(); ++k) CHECK(fit[k] >= fit[k - 1]);
    for (std::size_t k = 1; k + 1 < xs.size(); ++k) CHECK(fit[k + 1] - 2 * fit[k] + fit[k - 1] <= 1e-12);
    CHECK(fit[3] == doctest::Approx(2.2));
    CHECK(fit[4] == doctest::Approx(2.2));
}
