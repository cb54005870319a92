#include <doctest.h>

#include <cmath>

#include "deepjam/fungrid.hpp"
#include "deepjam/rng.hpp"
#include "deepjam/simgen.hpp"

using namespace deepjam;

namespace {

FunctionSample make_univariate(const Grid& g, double (*fn)(double)) {
    MatrixXd v(g.num_points, 1);
    for (int p = 0; p < g.num_points; ++p) v(p, 0) = fn(g.point(p));
    return FunctionSample{g, v};
}

Warp smooth_random_warp(const Grid& g, double roughness, std::uint64_t seed) {
    RandomStream rng(seed);
    return random_warp(g, roughness, 5, rng);
}

double max_abs(const VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("srsf of a linear function is constant") {
    const Grid g(5, 0.0, 1.0);
    const SrsfSample q = srsf(make_univariate(g, [](double t) { return t; }));
    for (int p = 0; p < 5; ++p) CHECK(q.values(p, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(q.anchor[0] == 0.0);
}

TEST_CASE("srsf of t^2 matches sqrt(2t) at interior points") {
    const Grid g(101, 0.0, 1.0);
    const SrsfSample q = srsf(make_univariate(g, [](double t) { return t * t; }));
    for (int p = 1; p + 1 < g.num_points; ++p) {
        const double expected = std::sqrt(2.0 * g.point(p));
        CHECK(q.values(p, 0) == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("srsf of a constant function is zero") {
    const Grid g(17, 0.0, 1.0);
    const SrsfSample q = srsf(make_univariate(g, [](double) { return 3.5; }));
    CHECK(max_abs(q.values.col(0)) == 0.0);
    CHECK(q.anchor[0] == 3.5);
}

TEST_CASE("srsf_inverse of simple SRSFs") {
    const Grid g(9, 0.0, 1.0);
    SrsfSample q{g, MatrixXd::Ones(9, 1), VectorXd::Zero(1)};
    const FunctionSample f = srsf_inverse(q);
    for (int p = 0; p < 9; ++p) CHECK(f.values(p, 0) == doctest::Approx(g.point(p)).epsilon(1e-12));

    q.values.setZero();
    q.anchor[0] = 3.0;
    const FunctionSample c = srsf_inverse(q);
    CHECK(c.values.isApproxToConstant(3.0, 1e-15));
}

TEST_CASE("srsf round trip on a band-limited sample") {
    const Grid g(193, 0.0, 1.0);
    const FunctionSample f = make_univariate(g, [](double t) { return std::sin(2.0 * M_PI * t); });
    const FunctionSample back = srsf_inverse(srsf(f));
    CHECK(max_abs((back.values - f.values).col(0)) < 1e-3);
}

TEST_CASE("warping with the identity changes nothing") {
    const Grid g(65, 0.0, 1.0);
    const FunctionSample f = make_univariate(g, [](double t) { return std::cos(4.0 * t); });
    const SrsfSample q = srsf(f);
    const Warp id = identity_warp(g);
    CHECK((warp_srsf(q, id).values - q.values).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((warp_function(f, id).values - f.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("warping a constant SRSF gives sqrt of the warp derivative") {
    const Grid g(129, 0.0, 1.0);
    SrsfSample q{g, MatrixXd::Ones(g.num_points, 1), VectorXd::Zero(1)};
    const Warp gamma = smooth_random_warp(g, 0.25, 11);
    const SrsfSample warped = warp_srsf(q, gamma);
    const VectorXd expected = derivative(gamma.values, g.spacing()).cwiseSqrt();
    CHECK(max_abs(warped.values.col(0) - expected) < 1e-12);
}

TEST_CASE("group action is an L2 isometry on a fine grid") {
    const Grid g(1025, 0.0, 1.0);
    RandomStream rng(99);
    const double dt = g.spacing();
    for (int trial = 0; trial < 5; ++trial) {
        MatrixXd q1(g.num_points, 1), q2(g.num_points, 1);
        const double a = rng.gaussian(), b = rng.gaussian(), c = rng.gaussian();
        for (int p = 0; p < g.num_points; ++p) {
            const double t = g.point(p);
            q1(p, 0) = a * std::sin(2 * M_PI * t) + b * std::cos(4 * M_PI * t);
            q2(p, 0) = c * std::sin(6 * M_PI * t) + t;
        }
        const Warp gamma = smooth_random_warp(g, 0.2, 1000 + static_cast<std::uint64_t>(trial));
        const SrsfSample s1{g, q1, VectorXd::Zero(1)}, s2{g, q2, VectorXd::Zero(1)};
        const double lhs = l2_norm(warp_srsf(s1, gamma).values.col(0) - warp_srsf(s2, gamma).values.col(0), dt);
        const double rhs = l2_norm((q1 - q2).col(0), dt);
        CHECK(std::abs(lhs - rhs) / rhs < 1e-3);
    }
}

TEST_CASE("action compatibility with composition") {
    const Grid g(257, 0.0, 1.0);
    const FunctionSample f = make_univariate(g, [](double t) { return std::sin(2 * M_PI * t) + 0.5 * t; });
    const SrsfSample q = srsf(f);
    const Warp g1 = smooth_random_warp(g, 0.2, 5);
    const Warp g2 = smooth_random_warp(g, 0.2, 6);
    const SrsfSample two_steps = warp_srsf(warp_srsf(q, g1), g2);
    const SrsfSample one_step = warp_srsf(q, compose_warps(g1, g2));
    CHECK(l2_norm((two_steps.values - one_step.values).col(0), g.spacing()) < 5e-3);
}

TEST_CASE("warp composition and inversion behave like a group") {
    const Grid g(129, 0.0, 1.0);
    const Warp id = identity_warp(g);
    const Warp gamma = smooth_random_warp(g, 0.3, 7);

    CHECK(max_abs(compose_warps(id, gamma).values - gamma.values) < 1e-12);
    CHECK(max_abs(invert_warp(id).values - id.values) == 0.0);

    const Warp round = compose_warps(gamma, invert_warp(gamma));
    CHECK(max_abs(round.values - id.values) < 2.0 * g.spacing());
}

TEST_CASE("warp_function composes values") {
    const Grid g(65, 0.0, 1.0);
    const FunctionSample line = make_univariate(g, [](double t) { return t; });
    const Warp gamma = smooth_random_warp(g, 0.3, 8);
    const FunctionSample warped = warp_function(line, gamma);
    CHECK(max_abs(warped.values.col(0) - gamma.values) < 1e-12);

    const FunctionSample flat = make_univariate(g, [](double) { return 2.0; });
    CHECK(warp_function(flat, gamma).values.isApproxToConstant(2.0, 1e-15));
}

TEST_CASE("non-monotone warps are rejected") {
    const Grid g(5, 0.0, 1.0);
    VectorXd bad(5);
    bad << 0.0, 0.5, 0.4, 0.8, 1.0;
    const Warp w{g, bad};
    CHECK_THROWS_AS(w.validate(), ValidationError);
    const FunctionSample f = make_univariate(g, [](double t) { return t; });
    CHECK_THROWS_AS(warp_function(f, w), ValidationError);
    CHECK_THROWS_AS(warp_srsf(srsf(f), w), ValidationError);
}

TEST_CASE("extend and split of functions are exact duals") {
    const Grid g(33, 0.0, 1.0);
    const FunctionSample f = make_univariate(g, [](double t) { return std::sin(2 * M_PI * t) + t; });

    CHECK(extend_function(f, 1).values == f.values);

    const FunctionSample ext = extend_function(f, 3);
    CHECK(ext.grid.num_points == 3 * 32 + 1);
    CHECK(ext.grid.hi == doctest::Approx(3.0));
    const auto segs = split_function(ext, 3);
    REQUIRE(segs.size() == 3);
    for (const FunctionSample& s : segs) {
        REQUIRE(s.values.rows() == f.values.rows());
        CHECK(s.values == f.values);  // bitwise
    }
}

TEST_CASE("extended sine matches a longer sine") {
    const Grid g(65, 0.0, 1.0);
    const FunctionSample one = make_univariate(g, [](double t) { return std::sin(2 * M_PI * t); });
    FunctionSample ext = extend_function(one, 3);
    ext.grid = Grid(ext.grid.num_points, 0.0, 1.0);
    for (int p = 0; p < ext.grid.num_points; ++p)
        CHECK(ext.values(p, 0) == doctest::Approx(std::sin(6 * M_PI * ext.grid.point(p))).epsilon(1e-9));
}

TEST_CASE("warp extension keeps identity and validity") {
    const Grid g(33, 0.0, 1.0);
    CHECK(max_abs(extend_warp(identity_warp(g), 4).values - identity_warp(Grid(129, 0.0, 4.0)).values) < 1e-12);
    CHECK(extend_warp(identity_warp(g), 1).values == identity_warp(g).values);

    const Warp gamma = smooth_random_warp(g, 0.3, 9);
    const Warp ext = extend_warp(gamma, 3);
    ext.validate();
    const auto segs = split_warp(ext, 3);
    REQUIRE(segs.size() == 3);
    for (const Warp& s : segs) {
        s.validate();
        CHECK(max_abs(s.values - gamma.values) < 1e-13);
    }
}

TEST_CASE("split rejects a point count that does not divide") {
    const Grid g(34, 0.0, 1.0);
    const FunctionSample f = make_univariate(g, [](double t) { return t; });
    CHECK_THROWS_AS(split_function(f, 3), ValidationError);
}

TEST_CASE("scale_warp is exact on round trips") {
    const Grid g(65, 0.0, 1.0);
    const Warp gamma = smooth_random_warp(g, 0.3, 12);
    const Warp same = scale_warp(gamma, 0.0, 1.0, 0.0, 1.0);
    CHECK(max_abs(same.values - gamma.values) == 0.0);

    const Warp there = scale_warp(gamma, 2.0, 5.0, -1.0, 1.0);
    const Warp back = scale_warp(there, 0.0, 1.0, 0.0, 1.0);
    CHECK(max_abs(back.values - gamma.values) < 1e-12);

    const Warp id_scaled = scale_warp(identity_warp(g), 0.0, 0.5, 0.0, 0.5);
    CHECK(max_abs(id_scaled.values - identity_warp(Grid(65, 0.0, 0.5)).values) < 1e-15);
}

TEST_CASE("derivative_transpose is the adjoint of derivative") {
    const Grid g(17, 0.0, 1.0);
    RandomStream rng(3);
    VectorXd a(17), b(17);
    for (int p = 0; p < 17; ++p) {
        a[p] = rng.gaussian();
        b[p] = rng.gaussian();
    }
    const double lhs = derivative(a, g.spacing()).dot(b);
    const double rhs = a.dot(derivative_transpose(b, g.spacing()));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}
