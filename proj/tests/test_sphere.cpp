#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "deepjam/rng.hpp"
#include "deepjam/simgen.hpp"
#include "deepjam/sphere.hpp"

using namespace deepjam;

namespace {

Warp quadratic_warp(const Grid& g, double bend) {
    // (1-a) t + a t^2 round-trips exactly through the discrete stencils
    VectorXd v(g.num_points);
    for (int p = 0; p < g.num_points; ++p) {
        const double t = g.point(p);
        v[p] = (1.0 - bend) * t + bend * t * t;
    }
    v[0] = 0.0;
    v[g.num_points - 1] = 1.0;
    return Warp{g, v};
}

Warp smooth_random_warp(const Grid& g, double roughness, std::uint64_t seed) {
    RandomStream rng(seed);
    return random_warp(g, roughness, 5, rng);
}

}  // namespace

TEST_CASE("psi of the identity warp is the constant one") {
    const Grid g(129, 0.0, 1.0);
    const PsiPoint psi = warp_to_psi(identity_warp(g));
    CHECK((psi.values.array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("psi points are unit norm for random warps") {
    const Grid g(193, 0.0, 1.0);
    for (std::uint64_t s = 0; s < 5; ++s) {
        const PsiPoint psi = warp_to_psi(smooth_random_warp(g, 0.3, 21 + s));
        CHECK(std::abs(l2_norm(psi.values, g.spacing()) - 1.0) < 1e-9);
        CHECK(psi.values.minCoeff() > 0.0);
    }
}

TEST_CASE("psi_to_warp of the constant one is the identity") {
    const Grid g(65, 0.0, 1.0);
    const Warp w = psi_to_warp(PsiPoint{g, VectorXd::Ones(65)});
    CHECK((w.values - identity_warp(g).values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("warp <-> psi round trip") {
    const Grid g(193, 0.0, 1.0);
    SUBCASE("quadratic warps are exact") {
        const Warp w = quadratic_warp(g, 0.6);
        const Warp back = psi_to_warp(warp_to_psi(w));
        CHECK((back.values - w.values).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("smooth warps within discretization tolerance") {
        const Warp w = smooth_random_warp(g, 0.25, 33);
        const Warp back = psi_to_warp(warp_to_psi(w));
        CHECK((back.values - w.values).cwiseAbs().maxCoeff() < 1e-3);
    }
}

TEST_CASE("exponential map basics") {
    const Grid g(97, 0.0, 1.0);
    const PsiPoint psi = warp_to_psi(smooth_random_warp(g, 0.25, 40));
    const TangentVector zero{g, VectorXd::Zero(97)};
    CHECK((exp_map(psi, zero, 1.0).values - psi.values).cwiseAbs().maxCoeff() == 0.0);

    const PsiPoint other = warp_to_psi(smooth_random_warp(g, 0.25, 41));
    const TangentVector v = inv_exp_map(psi, other);
    CHECK(std::abs(l2_norm(exp_map(psi, v, 0.5).values, g.spacing()) - 1.0) < 1e-9);
}

TEST_CASE("inverse exponential map properties") {
    const Grid g(129, 0.0, 1.0);
    const PsiPoint psi = warp_to_psi(smooth_random_warp(g, 0.25, 50));
    const PsiPoint other = warp_to_psi(smooth_random_warp(g, 0.25, 51));

    SUBCASE("log at the same point is zero") {
        CHECK(inv_exp_map(psi, psi).values.cwiseAbs().maxCoeff() < 1e-9);
    }
    SUBCASE("tangent norm equals the geodesic distance") {
        const TangentVector v = inv_exp_map(psi, other);
        CHECK(std::abs(l2_norm(v.values, g.spacing()) - sphere_distance(psi, other)) < 1e-8);
    }
    SUBCASE("tangent vectors are orthogonal to the base") {
        const TangentVector v = inv_exp_map(psi, other);
        CHECK(std::abs(l2_inner(v.values, psi.values, g.spacing())) < 1e-8);
    }
    SUBCASE("exp undoes log") {
        const TangentVector v = inv_exp_map(psi, other);
        CHECK((exp_map(psi, v, 1.0).values - other.values).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("Karcher mean fixed points") {
    const Grid g(129, 0.0, 1.0);
    const KarcherConfig cfg;

    SUBCASE("identity inputs") {
        const std::vector<Warp> warps(5, identity_warp(g));
        const KarcherResult res = karcher_mean_warps(warps, cfg);
        CHECK(res.converged);
        CHECK((res.mean.values - identity_warp(g).values).cwiseAbs().maxCoeff() < 1e-6);
    }
    SUBCASE("single input") {
        const Warp w = quadratic_warp(g, 0.5);
        const KarcherResult res = karcher_mean_warps({w}, cfg);
        CHECK(res.converged);
        CHECK(res.iterations == 1);
        CHECK((res.mean.values - w.values).cwiseAbs().maxCoeff() < 1e-6);
    }
    SUBCASE("identical inputs") {
        const Warp w = quadratic_warp(g, -0.4);
        const std::vector<Warp> warps(7, w);
        const KarcherResult res = karcher_mean_warps(warps, cfg);
        CHECK(res.converged);
        CHECK((res.mean.values - w.values).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("Karcher mean converges with a small tangent residual") {
    const Grid g(129, 0.0, 1.0);
    std::vector<Warp> warps;
    for (std::uint64_t s = 0; s < 10; ++s) warps.push_back(smooth_random_warp(g, 0.3, 60 + s));
    const KarcherConfig cfg;
    const KarcherResult res = karcher_mean_warps(warps, cfg);
    CHECK(res.converged);
    CHECK(res.final_tangent_norm < cfg.stopping_criterion);

    // first-order optimality: mean tangent projection at the returned mean
    const PsiPoint mu = warp_to_psi(res.mean);
    VectorXd acc = VectorXd::Zero(g.num_points);
    for (const Warp& w : warps) acc += inv_exp_map(mu, warp_to_psi(w)).values;
    acc /= static_cast<double>(warps.size());
    CHECK(l2_norm(acc, g.spacing()) < 10.0 * cfg.stopping_criterion);
}

TEST_CASE("Karcher mean is stable under relabeling") {
    const Grid g(65, 0.0, 1.0);
    std::vector<Warp> warps;
    for (std::uint64_t s = 0; s < 8; ++s) warps.push_back(smooth_random_warp(g, 0.3, 80 + s));
    const KarcherResult a = karcher_mean_warps(warps, {});
    std::reverse(warps.begin(), warps.end());
    const KarcherResult b = karcher_mean_warps(warps, {});
    CHECK((a.mean.values - b.mean.values).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("Frechet functional is non-increasing at a small step size") {
    const Grid g(65, 0.0, 1.0);
    std::vector<Warp> warps;
    for (std::uint64_t s = 0; s < 6; ++s) warps.push_back(smooth_random_warp(g, 0.35, 90 + s));
    std::vector<PsiPoint> psis;
    for (const Warp& w : warps) psis.push_back(warp_to_psi(w));

    KarcherConfig cfg;
    cfg.step_size = 0.1;
    const double dt = g.spacing();

    // replicate the iteration, tracking the Frechet functional
    VectorXd mean = VectorXd::Zero(g.num_points);
    for (const PsiPoint& p : psis) mean += p.values;
    mean /= static_cast<double>(psis.size());
    mean /= l2_norm(mean, dt);
    PsiPoint mu{g, mean};
    TangentVector mv{g, VectorXd::Zero(g.num_points)};

    const auto frechet = [&](const PsiPoint& m) {
        double acc = 0.0;
        for (const PsiPoint& p : psis) {
            const double d = sphere_distance(m, p);
            acc += d * d;
        }
        return acc;
    };

    double prev = frechet(mu);
    for (int e = 0; e < 30; ++e) {
        mu = exp_map(mu, mv, cfg.step_size);
        mu.values /= l2_norm(mu.values, dt);
        const double now = frechet(mu);
        CHECK(now <= prev + 1e-12);
        prev = now;
        VectorXd acc = VectorXd::Zero(g.num_points);
        for (const PsiPoint& p : psis) acc += inv_exp_map(mu, p).values;
        mv.values = acc / static_cast<double>(psis.size());
    }
}

TEST_CASE("karcher config and inputs are validated") {
    CHECK_THROWS_AS(karcher_mean_warps({}, {}), ValidationError);
    KarcherConfig bad;
    bad.step_size = 0.0;
    CHECK_THROWS_AS(karcher_mean_warps({identity_warp(Grid(65, 0.0, 1.0))}, bad), ValidationError);
}
