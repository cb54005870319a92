#pragma once

#include "deepjam/rng.hpp"
#include "deepjam/sphere.hpp"

namespace deepjam {

struct SimConfig {
    int n_total = 14000;
    double train_fraction = 8.0 / 14.0;
    double tune_fraction = 2.0 / 14.0;
    double validation_fraction = 2.0 / 14.0;
    double test_fraction = 2.0 / 14.0;
    int num_periods = 3;
    int points_per_period = 65;
    std::uint64_t seed = 0;
    double warp_roughness = 0.3;
    int basis_size = 4;

    int total_points() const { return num_periods * (points_per_period - 1) + 1; }
    void validate() const;
};

struct SplitCounts {
    int train = 0, tune = 0, validation = 0, test = 0;
};

struct SimDataset {
    int scenario = 1;
    int num_periods = 3;
    std::vector<FunctionSample> functions;  // n subjects, contiguous train/tune/val/test blocks
    SplitCounts split;
    std::vector<Warp> true_local;   // one period, [0,1]^2
    std::vector<Warp> true_global;  // full domain, [0,1]^2
    std::vector<Warp> true_total;   // full domain, [0,1]^2
    FunctionSample common_template;  // one period on [0, 1/K]
    MatrixXd amplitude_factors;      // n x 18 for scenario 2, empty otherwise
};

/// Random boundary-preserving warp on [0,1]: a Gaussian tangent vector at the
/// constant psi in an orthonormal sine basis (coefficients N(0,(rough/m)^2)),
/// pushed through the exponential map. Draws leaving the positive orthant are
/// resampled (bounded retries).
Warp random_warp(const Grid& grid, double roughness, int basis_size, RandomStream& rng);

/// Identifiability centering: re-expresses planted local/global pairs so the
/// per-subject segment Karcher mean of the total warp equals the local part.
struct CenteredWarpSet {
    std::vector<Warp> locals;   // one period, [0,1]^2
    std::vector<Warp> globals;  // full domain, [0,1]^2
    std::vector<Warp> totals;   // full domain, [0,1]^2
};
CenteredWarpSet center_warp_set(const std::vector<Warp>& locals, const std::vector<Warp>& globals, int num_periods,
                                const KarcherConfig& karcher = {});

/// Univariate scenario: sine template, multiscale warps, no amplitude
/// variability.
SimDataset scenario1(const SimConfig& cfg);

/// Trivariate scenario: piecewise-scaled sine, a Gaussian-bump channel with
/// boundary-matched line corrections, and a normal-density channel; amplitude
/// factors z ~ N(1, 0.25^2); channels 2-3 affinely rescaled so the template
/// images are [-1,1].
SimDataset scenario2(const SimConfig& cfg);

/// Raw (pre-rescale) scenario-2 period curves, exposed for direct checks of
/// the boundary-matching construction. u is the in-period coordinate:
/// [0,6] for channel 2, [0,1] for channel 3.
namespace scenario2_detail {
double channel2_raw(double u, double z_a, double z_b);
double channel3_raw(double u, double z_a, double z_b, double z_c);
}  // namespace scenario2_detail

}  // namespace deepjam
