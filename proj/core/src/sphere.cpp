#include "deepjam/sphere.hpp"

#include <cmath>
#include <string>

namespace deepjam {

namespace {

constexpr double kSmallAngle = 1e-12;

void require_unit_domain(const Grid& g, const char* where) {
    if (std::abs(g.lo) > 1e-12 || std::abs(g.hi - 1.0) > 1e-12)
        throw ValidationError(std::string(where) + ": expected a warp on [0,1]");
}

}  // namespace

void PsiPoint::validate(const char* where) const {
    if (values.size() != grid.num_points)
        throw ValidationError(std::string(where) + ": value count != grid points");
    if ((values.array() <= 0.0).any())
        throw ValidationError(std::string(where) + ": left the positive orthant");
    const double n = l2_norm(values, grid.spacing());
    if (std::abs(n - 1.0) > 1e-9)
        throw ValidationError(std::string(where) + ": norm " + std::to_string(n) + " not within 1e-9 of 1");
}

void KarcherConfig::validate() const {
    if (!(stopping_criterion > 0.0)) throw ValidationError("KarcherConfig: stopping criterion must be positive");
    if (max_iterations < 1) throw ValidationError("KarcherConfig: max iterations must be >= 1");
    if (!(step_size > 0.0) || step_size > 1.0) throw ValidationError("KarcherConfig: step size must be in (0,1]");
}

PsiPoint warp_to_psi(const Warp& gamma) {
    gamma.validate("warp_to_psi");
    require_unit_domain(gamma.grid, "warp_to_psi");
    const double dt = gamma.grid.spacing();
    VectorXd gdot = derivative(gamma.values, dt);
    // The one-sided stencil can undershoot below zero at the two boundary
    // points for steep piecewise-linear warps; floor it there.
    VectorXd psi = gdot.cwiseMax(1e-12).cwiseSqrt();
    psi /= l2_norm(psi, dt);
    PsiPoint out{gamma.grid, std::move(psi)};
    out.validate("warp_to_psi result");
    return out;
}

Warp psi_to_warp(const PsiPoint& psi) {
    psi.validate("psi_to_warp");
    const double dt = psi.grid.spacing();
    VectorXd g = cumulative_trapezoid(psi.values.cwiseProduct(psi.values), dt);
    const double total = g[g.size() - 1];
    if (!(total > 0.0)) throw ValidationError("psi_to_warp: degenerate integral");
    g /= total;
    g[0] = 0.0;
    g[g.size() - 1] = 1.0;
    Warp w{psi.grid, std::move(g)};
    w.validate("psi_to_warp result");
    return w;
}

PsiPoint exp_map(const PsiPoint& psi, const TangentVector& v, double scale) {
    require_same_grid(psi.grid, v.grid, "exp_map");
    const double dt = psi.grid.spacing();
    const VectorXd sv = scale * v.values;
    const double norm = l2_norm(sv, dt);
    if (norm < kSmallAngle) return psi;
    VectorXd out = std::cos(norm) * psi.values + (std::sin(norm) / norm) * sv;
    if ((out.array() <= 0.0).any())
        throw RuntimeError("exp_map: step of length " + std::to_string(norm) + " left the positive orthant");
    return PsiPoint{psi.grid, std::move(out)};
}

TangentVector inv_exp_map(const PsiPoint& psi, const PsiPoint& psi_tilde) {
    require_same_grid(psi.grid, psi_tilde.grid, "inv_exp_map");
    const double dt = psi.grid.spacing();
    double ip = l2_inner(psi.values, psi_tilde.values, dt);
    ip = std::clamp(ip, -1.0, 1.0);
    const double theta = std::acos(ip);
    if (theta >= M_PI - 1e-9)
        throw RuntimeError("inv_exp_map: antipodal points (theta = " + std::to_string(theta) + ")");
    if (theta < kSmallAngle) return TangentVector{psi.grid, VectorXd::Zero(psi.values.size())};
    const double factor = theta / std::sin(theta);
    return TangentVector{psi.grid, factor * (psi_tilde.values - ip * psi.values)};
}

double sphere_distance(const PsiPoint& a, const PsiPoint& b) {
    require_same_grid(a.grid, b.grid, "sphere_distance");
    const double ip = std::clamp(l2_inner(a.values, b.values, a.grid.spacing()), -1.0, 1.0);
    return std::acos(ip);
}

KarcherResult karcher_mean_warps(const std::vector<Warp>& warps, const KarcherConfig& cfg) {
    cfg.validate();
    if (warps.empty()) throw ValidationError("karcher_mean_warps: empty input");
    const Grid grid = warps.front().grid;
    const double dt = grid.spacing();
    const double inv_n = 1.0 / static_cast<double>(warps.size());

    std::vector<PsiPoint> psis;
    psis.reserve(warps.size());
    for (const Warp& w : warps) {
        require_same_grid(grid, w.grid, "karcher_mean_warps");
        psis.push_back(warp_to_psi(w));
    }

    VectorXd mean = VectorXd::Zero(grid.num_points);
    for (const PsiPoint& p : psis) mean += p.values;
    mean *= inv_n;
    mean /= l2_norm(mean, dt);
    PsiPoint mu{grid, std::move(mean)};

    TangentVector mu_v{grid, VectorXd::Zero(grid.num_points)};
    double tangent_norm = 0.0;
    int e = 0;
    while ((tangent_norm >= cfg.stopping_criterion || e == 0) && e < cfg.max_iterations) {
        ++e;
        mu = exp_map(mu, mu_v, cfg.step_size);
        mu.values /= l2_norm(mu.values, dt);
        VectorXd acc = VectorXd::Zero(grid.num_points);
        for (const PsiPoint& p : psis) acc += inv_exp_map(mu, p).values;
        mu_v.values = acc * inv_n;
        tangent_norm = l2_norm(mu_v.values, dt);
    }

    KarcherResult res;
    res.mean = psi_to_warp(mu);
    res.converged = tangent_norm < cfg.stopping_criterion;
    res.iterations = e;
    res.final_tangent_norm = tangent_norm;
    return res;
}

}  // namespace deepjam
