#pragma once

#include <optional>
#include <vector>

#include "deepjam/fungrid.hpp"

namespace deepjam {

/// Cumulative cross-sectional variance per channel:
/// (1/(n-1)) int sum_i (f_i - ref)^2 with the cross-sectional mean standing
/// in for the reference when none is given. Trapezoidal integration.
VectorXd ccsv(const std::vector<FunctionSample>& fs,
              const std::optional<FunctionSample>& reference = std::nullopt);

/// Squared L2 distance between the cross-sectional mean and a template,
/// per channel.
VectorXd mean_template_distance(const std::vector<FunctionSample>& fs, const FunctionSample& mu);

/// Tables-shaped evaluation report: per-channel observed/aligned CCSV and
/// mean-vs-template distances with percent reductions.
struct VarianceReport {
    VectorXd observed_ccsv;
    VectorXd aligned_ccsv;
    VectorXd ccsv_reduction_percent;
    VectorXd observed_mean_distance;  // empty when no true template is known
    VectorXd aligned_mean_distance;
    VectorXd mean_distance_reduction_percent;

    bool has_template() const { return observed_mean_distance.size() > 0; }
};

VarianceReport make_variance_report(const std::vector<FunctionSample>& observed,
                                    const std::vector<FunctionSample>& aligned,
                                    const std::optional<FunctionSample>& true_template = std::nullopt);

/// Percent reduction 100*(1 - aligned/observed), NaN-safe for observed == 0.
VectorXd percent_reduction(const VectorXd& observed, const VectorXd& aligned);

}  // namespace deepjam
