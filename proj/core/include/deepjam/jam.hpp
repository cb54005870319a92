#pragma once

#include "deepjam/sphere.hpp"
#include "deepjam/warpnet.hpp"

namespace deepjam {

enum class TemplateAnchorRule { zero, mean_initial_values };
enum class SubjectTemplateMode { warp, amplitude };

struct JamConfig {
    int num_periods = 1;       // K
    int outer_iterations = 1;  // E
    KarcherConfig karcher;
    NetConfig net;
    TemplateAnchorRule template_anchor_rule = TemplateAnchorRule::mean_initial_values;
    SubjectTemplateMode subject_template_mode = SubjectTemplateMode::amplitude;

    void validate() const;
};

struct AlignmentResult {
    std::vector<Warp> total_warps;            // gamma_i on [0,1]^2, aligning warps
    std::vector<Warp> local_means;            // mu_{gamma_i} on [0,1]^2 (inverse local warps)
    std::vector<Warp> global_warps;           // gamma_i o (ext mu_{gamma_i})^{-1} (inverse global warps)
    SrsfSample common_template_srsf;          // mu_q on one period [0, 1/K]
    FunctionSample common_template;           // mu on one period
    std::vector<FunctionSample> subject_templates;
    Warp centering_warp;                      // gamma' of the last iteration, needed to align new data
    std::vector<double> loss_history;         // epoch-mean loss per outer iteration
    std::vector<double> variance_history;     // channel-mean aligned CCSV per outer iteration
    WarpNetParams net;
};

/// Joint alignment of multivariate quasi-periodic functional data. All
/// subjects must share one grid on [0,1] with (P-1) divisible by K.
AlignmentResult run_deepjam(const std::vector<FunctionSample>& data, const JamConfig& cfg);

/// Compose each predicted warp with the scaled extended inverse Karcher mean
/// of all n*K rescaled segments. Returns the centered warps, the centering
/// warp gamma' and the segment Karcher mean.
struct CenterResult {
    std::vector<Warp> centered;
    Warp centering_warp;
    Warp segment_mean;  // mu_gamma on [0,1]^2 (one period)
};
CenterResult center_warps(const std::vector<Warp>& warps, int num_periods, const KarcherConfig& karcher);

/// Split a total warp into K rescaled segments and Karcher-mean them:
/// local mean mu_gamma (= inverse local warp) and the global part
/// gamma o (ext mu_gamma)^{-1} (= inverse global warp).
struct WarpDecomposition {
    Warp local_mean;
    Warp global_part;
};
WarpDecomposition decompose_total_warp(const Warp& total, int num_periods, const KarcherConfig& karcher);

/// Reconstruct the common template from its SRSF; the anchor constant is the
/// rule applied to the subjects' initial values.
FunctionSample extract_common_template(const SrsfSample& mu_q, TemplateAnchorRule rule,
                                       const std::vector<FunctionSample>& subjects);

/// Subject-specific template. Mode "warp" composes the common template with
/// the inverse local mean (valid only without amplitude variability); mode
/// "amplitude" averages the K aligned SRSF segments of the subject and
/// reconstructs, anchored at the mean of the aligned segment start values.
FunctionSample subject_template(const SrsfSample& q_subject, const FunctionSample& f_subject,
                                const FunctionSample& common, const WarpDecomposition& parts, int num_periods,
                                SubjectTemplateMode mode);

/// Predict aligning warps for new subjects with a trained net plus the
/// centering warp stored from the training run.
std::vector<Warp> align_with_net(const WarpNetParams& net, const Warp& centering_warp,
                                 const std::vector<FunctionSample>& data);

}  // namespace deepjam
