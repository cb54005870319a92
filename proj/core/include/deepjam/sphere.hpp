#pragma once

#include <vector>

#include "deepjam/fungrid.hpp"

namespace deepjam {

/// SRSF of a warping function: a unit-norm positive vector on the positive
/// orthant of the Hilbert sphere (L2 trapezoidal norm).
struct PsiPoint {
    Grid grid;
    VectorXd values;

    void validate(const char* where = "PsiPoint") const;
};

/// Tangent vector at a sphere point: orthogonal to the base under the
/// trapezoidal inner product.
struct TangentVector {
    Grid grid;
    VectorXd values;
};

struct KarcherConfig {
    double stopping_criterion = 1e-6;
    int max_iterations = 200;
    double step_size = 0.3;

    void validate() const;
};

struct KarcherResult {
    Warp mean;
    bool converged = false;
    int iterations = 0;
    double final_tangent_norm = 0.0;
};

/// psi = sqrt(gamma'), renormalized to unit norm. Requires a warp on
/// [0,1] -> [0,1]. Discrete boundary-stencil undershoot is floored so psi
/// stays in the open positive orthant.
PsiPoint warp_to_psi(const Warp& gamma);

/// gamma(t) = int_0^t psi^2, affinely pinned to gamma(0)=0, gamma(1)=1.
Warp psi_to_warp(const PsiPoint& psi);

/// cos(|s v|) psi + sin(|s v|) s v / |s v|; returns psi when |s v| < 1e-12.
/// Leaving the positive orthant (any coordinate <= 0) is an error.
PsiPoint exp_map(const PsiPoint& psi, const TangentVector& v, double scale);

/// Standard sphere log map: (theta/sin theta)(psi_tilde - cos(theta) psi)
/// with theta = arccos(<psi, psi_tilde>) clamped to [-1,1]; zero vector when
/// theta < 1e-12.
TangentVector inv_exp_map(const PsiPoint& psi, const PsiPoint& psi_tilde);

/// Geodesic distance on the sphere, arccos of the clamped inner product.
double sphere_distance(const PsiPoint& a, const PsiPoint& b);

/// Fixed-point iteration for the Karcher mean of warping functions on
/// [0,1] -> [0,1]. Non-convergence returns the last iterate with
/// converged = false.
KarcherResult karcher_mean_warps(const std::vector<Warp>& warps, const KarcherConfig& cfg);

}  // namespace deepjam
