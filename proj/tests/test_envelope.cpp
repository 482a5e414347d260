#include "doctest.h"

#include <random>
#include <stdexcept>

#include "oracles.hpp"
#include "suphedge/envelope.hpp"
#include "suphedge/errors.hpp"
#include "suphedge/na_check.hpp"

using namespace suphedge;

namespace {

std::vector<Vec> pts1(std::initializer_list<double> ys) {
    std::vector<Vec> out;
    for (double y : ys) out.push_back({y});
    return out;
}

void check_invariants(const std::vector<Vec>& pts, const Vec& f, const Vec& s, const EnvelopeResult& r) {
    const double tol = 1e-9 * (1.0 + std::abs(r.value));
    double qf = 0.0, mass = 0.0;
    Vec bary(s.size(), 0.0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        CHECK(r.weights[i] >= -1e-12);
        qf += r.weights[i] * f[i];
        mass += r.weights[i];
        for (std::size_t k = 0; k < s.size(); ++k) bary[k] += r.weights[i] * pts[i][k];
        CHECK(r.value + dot(r.hedge, sub(pts[i], s)) >= f[i] - tol);
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(qf - r.value) <= tol);
    for (std::size_t k = 0; k < s.size(); ++k) CHECK(std::abs(bary[k] - s[k]) <= 1e-9 * (1.0 + std::abs(s[k])));
    // equality on the support of the optimal martingale weights
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (r.weights[i] > 1e-9) CHECK(std::abs(r.value + dot(r.hedge, sub(pts[i], s)) - f[i]) <= 1e-7);
}

}  // namespace

TEST_CASE("envelope: running-min one-step example") {
    const auto pts = pts1({0, 2, 4});
    const Vec f{0, 2, 2};
    const auto r = envelope_at(pts, f, Vec{2});
    CHECK(r.value == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r.hedge[0] >= -1e-9);
    CHECK(r.hedge[0] <= 1.0 + 1e-9);
    check_invariants(pts, f, Vec{2}, r);

    const auto face = superdifferential_box(pts, f, Vec{2});
    CHECK(face.ranges[0].first == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(face.ranges[0].second == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(face.contains(r.hedge, pts, f, Vec{2}));
    for (double h : {0.0, 0.3, 1.0}) CHECK(face.contains(Vec{h}, pts, f, Vec{2}));
    CHECK_FALSE(face.contains(Vec{1.1}, pts, f, Vec{2}));
    CHECK_FALSE(face.contains(Vec{-0.1}, pts, f, Vec{2}));
}

TEST_CASE("envelope: two-asset min payoff") {
    const std::vector<Vec> pts{{0, 0}, {2, 0}, {0, 2}, {2, 2}};
    const Vec f{0, 0, 0, 2};
    const Vec s{1, 1};
    const auto r = envelope_at(pts, f, s);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-12));
    check_invariants(pts, f, s, r);
    CHECK(r.hedge[0] + r.hedge[1] == doctest::Approx(1.0).epsilon(1e-9));

    const auto face = superdifferential_box(pts, f, s);
    CHECK(face.ranges[0].first == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(face.ranges[0].second == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(face.ranges[1].first == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(face.ranges[1].second == doctest::Approx(1.0).epsilon(1e-9));
    for (double lam : {0.0, 0.25, 0.5, 1.0}) CHECK(face.contains(Vec{lam, 1.0 - lam}, pts, f, s));
    CHECK_FALSE(face.contains(Vec{0.6, 0.6}, pts, f, s));
    CHECK_FALSE(face.contains(Vec{0.4, 0.4}, pts, f, s));
    CHECK_FALSE(face.contains(Vec{1.2, -0.2}, pts, f, s));
}

TEST_CASE("envelope: affine data and the binomial step") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const double m = 3.0 * U(rng), b = U(rng);
        const auto pts = pts1({5.0 + U(rng), 8.0, 11.0 + U(rng), 9.5});
        Vec f;
        for (const auto& y : pts) f.push_back(m * y[0] + b);
        const auto r = envelope_at(pts, f, Vec{8.5});
        CHECK(r.value == doctest::Approx(m * 8.5 + b).epsilon(1e-12));
        CHECK(r.hedge[0] == doctest::Approx(m).epsilon(1e-9));
    }

    const double pu = 20.0, pd = 3.0;
    const auto r = envelope_at(pts1({80, 120}), Vec{pd, pu}, Vec{100});
    CHECK(r.value == doctest::Approx(0.5 * pu + 0.5 * pd).epsilon(1e-12));
    CHECK(r.hedge[0] == doctest::Approx((pu - pd) / 40.0).epsilon(1e-12));

    CHECK(crr_step(20, 0, 1.2, 0.8) == doctest::Approx(10.0).epsilon(1e-15));
    CHECK(crr_step(3, 1, 1.5, 0.5) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(crr_step(7.25, 7.25, 1.3, 0.6) == doctest::Approx(7.25).epsilon(1e-15));
    CHECK_THROWS_AS(crr_step(1, 0, 1.2, 1.1), std::domain_error);
    CHECK_THROWS_AS(crr_step(1, 0, 0.9, 0.8), std::domain_error);
}

TEST_CASE("envelope: refuses arbitrage input") {
    try {
        envelope_at(pts1({110, 120}), Vec{1, 2}, Vec{100});
        FAIL("expected ArbitrageError");
    } catch (const ArbitrageError& e) {
        CHECK(std::string(e.what()).find("one-step arbitrage") != std::string::npos);
    }
    CHECK_THROWS_AS(envelope_at(pts1({80, 120}), Vec{1, INFINITY}, Vec{100}), ValidationError);
}

TEST_CASE("envelope: 1-d agrees with two-point enumeration") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 6);
        const double s = 10.0;
        std::vector<Vec> pts;
        Vec f, ys;
        pts.push_back({s - 1.0 - std::abs(U(rng))});
        pts.push_back({s + 1.0 + std::abs(U(rng))});
        for (int i = 2; i < n; ++i) pts.push_back({s + 3.0 * U(rng)});
        if (trial % 5 == 0) pts.push_back({s});
        for (const auto& y : pts) {
            ys.push_back(y[0]);
            f.push_back(5.0 * U(rng));
        }
        const auto r = envelope_at(pts, f, Vec{s});
        CHECK(r.value == doctest::Approx(oracle::envelope_1d(ys, f, s)).epsilon(1e-9));
        check_invariants(pts, f, Vec{s}, r);

        const auto face = superdifferential_box(pts, f, Vec{s});
        CHECK(face.ranges[0].first <= r.hedge[0] + 1e-9);
        CHECK(face.ranges[0].second >= r.hedge[0] - 1e-9);
        for (double h : {face.ranges[0].first, face.ranges[0].second}) {
            for (std::size_t i = 0; i < pts.size(); ++i)
                CHECK(r.value + h * (pts[i][0] - s) >= f[i] - 1e-8);
        }
    }
}

TEST_CASE("envelope: d-dimensional agreement with vertex enumeration") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int trial = 0; trial < 150; ++trial) {
        const std::size_t d = 2 + rng() % 2;
        const int n = static_cast<int>(d) + 2 + static_cast<int>(rng() % 3);
        Vec s(d, 5.0);
        std::vector<Vec> pts;
        Vec f;
        // symmetric pairs keep s strictly inside
        for (int i = 0; i < n; ++i) {
            Vec y(d);
            for (auto& v : y) v = 5.0 + 2.0 * U(rng);
            pts.push_back(y);
            if (static_cast<int>(pts.size()) < n) {
                Vec mirror(d);
                for (std::size_t k = 0; k < d; ++k) mirror[k] = 10.0 - y[k] + 0.3 * U(rng);
                pts.push_back(mirror);
                ++i;
            }
        }
        if (!check_node(pts, s).ok) continue;
        for (std::size_t i = 0; i < pts.size(); ++i) f.push_back(4.0 * U(rng));
        const auto r = envelope_at(pts, f, s);
        double best = -1e300;
        for (const auto& q : oracle::martingale_vertices(pts, s)) {
            double e = 0.0;
            for (std::size_t i = 0; i < pts.size(); ++i) e += q[i] * f[i];
            best = std::max(best, e);
        }
        CHECK(r.value == doctest::Approx(best).epsilon(1e-9));
        check_invariants(pts, f, s, r);
    }
}

TEST_CASE("envelope: order, translation, homogeneity, subadditivity, Jensen") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const auto pts = pts1({6, 8.5, 10, 12, 15});
    const Vec s{10};
    for (int trial = 0; trial < 200; ++trial) {
        Vec f(5), g(5), fg(5);
        for (std::size_t i = 0; i < 5; ++i) {
            f[i] = 3.0 * U(rng);
            g[i] = 3.0 * U(rng);
            fg[i] = f[i] + g[i];
        }
        Vec upper = f;
        for (auto& v : upper) v += std::abs(U(rng));
        const double ef = envelope_at(pts, f, s).value;
        const double eg = envelope_at(pts, g, s).value;
        CHECK(ef <= envelope_at(pts, upper, s).value + 1e-12);
        CHECK(envelope_at(pts, fg, s).value <= ef + eg + 1e-10);
        const double c = 5.0 * U(rng);
        Vec shifted = f;
        for (auto& v : shifted) v += c;
        const auto rs = envelope_at(pts, shifted, s);
        const auto rf = envelope_at(pts, f, s);
        CHECK(rs.value == doctest::Approx(ef + c).epsilon(1e-12));
        CHECK(rs.hedge[0] == doctest::Approx(rf.hedge[0]).epsilon(1e-9));
        const double lam = 4.0 * std::abs(U(rng));
        Vec scaled = f;
        for (auto& v : scaled) v *= lam;
        CHECK(envelope_at(pts, scaled, s).value == doctest::Approx(lam * ef).epsilon(1e-10));
        CHECK(ef >= f[2] - 1e-12);  // support point sitting at s
    }
}

TEST_CASE("envelope: superdifferential degenerate cases") {
    // two points: single slope
    const auto two = superdifferential_box(pts1({80, 120}), Vec{1, 9}, Vec{100});
    CHECK(two.ranges[0].first == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(two.ranges[0].second == doctest::Approx(0.2).epsilon(1e-9));

    // s strictly between consecutive points of concave data
    const auto smooth = superdifferential_box(pts1({1, 2, 3}), Vec{0, 1, 1.5}, Vec{1.5});
    CHECK(smooth.ranges[0].first == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(smooth.ranges[0].second == doctest::Approx(1.0).epsilon(1e-9));

    // all increments zero: the hedge lives in {0}
    const auto flat = superdifferential_box(pts1({4}), Vec{2}, Vec{4});
    CHECK(flat.span_basis.empty());
    CHECK(flat.ranges[0].first == 0.0);
    CHECK(flat.ranges[0].second == 0.0);
    CHECK(flat.value == doctest::Approx(2.0));
}

TEST_CASE("envelope: span basis of degenerate increments") {
    const auto diag = orthonormal_basis({{1, 1}, {-1, -1}}, 2);
    REQUIRE(diag.size() == 1);
    CHECK(std::abs(diag[0][0]) == doctest::Approx(std::sqrt(0.5)));
    CHECK(diag[0][0] == doctest::Approx(diag[0][1]));
    CHECK(orthonormal_basis({{0, 0}, {0, 0}}, 2).empty());
    CHECK(orthonormal_basis({{-20}, {20}}, 1).size() == 1);

    // hedge is reported inside the span
    const std::vector<Vec> pts{{2, 2}, {0, 0}};
    const auto r = envelope_at(pts, Vec{3, 1}, Vec{1, 1});
    CHECK(r.hedge[0] == doctest::Approx(r.hedge[1]).epsilon(1e-12));
    CHECK(r.value == doctest::Approx(2.0));
}
