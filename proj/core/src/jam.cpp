#include "deepjam/jam.hpp"

#include <cmath>
#include <string>

#include "deepjam/metrics.hpp"

namespace deepjam {

namespace {

Grid require_shared_unit_grid(const std::vector<FunctionSample>& data, int K, const char* where) {
    if (data.empty()) throw ValidationError(std::string(where) + ": no subjects");
    const Grid grid = data.front().grid;
    if (std::abs(grid.lo) > 1e-12 || std::abs(grid.hi - 1.0) > 1e-12)
        throw ValidationError(std::string(where) + ": subjects must live on [0,1]");
    const int J = data.front().channels();
    for (const FunctionSample& f : data) {
        f.validate(where);
        require_same_grid(grid, f.grid, where);
        if (f.channels() != J) throw ValidationError(std::string(where) + ": channel count mismatch");
    }
    PeriodStructure::infer(grid, K);
    return grid;
}

}  // namespace

void JamConfig::validate() const {
    if (num_periods < 1) throw ValidationError("JamConfig: K must be >= 1");
    if (outer_iterations < 1) throw ValidationError("JamConfig: outer_iterations must be >= 1");
    karcher.validate();
    net.validate();
}

CenterResult center_warps(const std::vector<Warp>& warps, int num_periods, const KarcherConfig& karcher) {
    if (warps.empty()) throw ValidationError("center_warps: no warps");
    std::vector<Warp> segments;
    segments.reserve(warps.size() * static_cast<std::size_t>(num_periods));
    for (const Warp& w : warps)
        for (Warp& seg : split_warp(w, num_periods))
            segments.push_back(scale_warp(seg, 0.0, 1.0, 0.0, 1.0));
    const KarcherResult mean = karcher_mean_warps(segments, karcher);
    const Warp centering = extend_warp_unit(invert_warp(mean.mean), num_periods);
    CenterResult out;
    out.centering_warp = centering;
    out.segment_mean = mean.mean;
    out.centered.reserve(warps.size());
    for (const Warp& w : warps) out.centered.push_back(compose_warps(w, centering));
    return out;
}

WarpDecomposition decompose_total_warp(const Warp& total, int num_periods, const KarcherConfig& karcher) {
    std::vector<Warp> segments;
    segments.reserve(static_cast<std::size_t>(num_periods));
    for (Warp& seg : split_warp(total, num_periods)) segments.push_back(scale_warp(seg, 0.0, 1.0, 0.0, 1.0));
    WarpDecomposition out;
    out.local_mean = karcher_mean_warps(segments, karcher).mean;
    out.global_part = compose_warps(total, invert_warp(extend_warp_unit(out.local_mean, num_periods)));
    return out;
}

FunctionSample extract_common_template(const SrsfSample& mu_q, TemplateAnchorRule rule,
                                       const std::vector<FunctionSample>& subjects) {
    SrsfSample anchored = mu_q;
    anchored.anchor = VectorXd::Zero(mu_q.channels());
    if (rule == TemplateAnchorRule::mean_initial_values) {
        if (subjects.empty()) throw ValidationError("extract_common_template: anchor rule needs subjects");
        VectorXd acc = VectorXd::Zero(mu_q.channels());
        for (const FunctionSample& f : subjects) acc += f.values.row(0).transpose();
        anchored.anchor = acc / static_cast<double>(subjects.size());
    }
    return srsf_inverse(anchored);
}

FunctionSample subject_template(const SrsfSample& q_subject, const FunctionSample& f_subject,
                                const FunctionSample& common, const WarpDecomposition& parts, int num_periods,
                                SubjectTemplateMode mode) {
    if (mode == SubjectTemplateMode::warp) {
        // mu_i = mu o mu_gamma^{-1} on one period
        const Warp inv_local =
            scale_warp(invert_warp(parts.local_mean), common.grid.lo, common.grid.hi, common.grid.lo, common.grid.hi);
        return warp_function(common, inv_local);
    }
    // amplitude mode: average the K aligned SRSF segments of
    // (q_i, gamma_i o (ext mu_gamma)^{-1}) and reconstruct.
    const SrsfSample aligned = warp_srsf(q_subject, parts.global_part);
    std::vector<SrsfSample> segs = split_srsf(aligned, num_periods);
    MatrixXd mean = MatrixXd::Zero(segs.front().values.rows(), segs.front().values.cols());
    for (const SrsfSample& s : segs) mean += s.values;
    mean /= static_cast<double>(num_periods);

    // anchor: mean of the subject's values at the aligned segment starts
    const FunctionSample f_aligned = warp_function(f_subject, parts.global_part);
    const int Ps = segs.front().grid.num_points;
    VectorXd anchor = VectorXd::Zero(f_subject.channels());
    for (int k = 0; k < num_periods; ++k) anchor += f_aligned.values.row(k * (Ps - 1)).transpose();
    anchor /= static_cast<double>(num_periods);

    return srsf_inverse(SrsfSample{segs.front().grid, std::move(mean), std::move(anchor)});
}

std::vector<Warp> align_with_net(const WarpNetParams& net, const Warp& centering_warp,
                                 const std::vector<FunctionSample>& data) {
    const Grid grid = require_shared_unit_grid(data, 1, "align_with_net");
    if (grid.num_points != net.config.input_points)
        throw ValidationError("align_with_net: grid size does not match the checkpoint");
    if (data.front().channels() != net.config.channels)
        throw ValidationError("align_with_net: channel count does not match the checkpoint");
    std::vector<MatrixXd> q_all;
    q_all.reserve(data.size());
    for (const FunctionSample& f : data) q_all.push_back(srsf(f).values);
    std::vector<int> everyone(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) everyone[i] = static_cast<int>(i);
    std::vector<Warp> predicted = forward(net, q_all, everyone);
    std::vector<Warp> out;
    out.reserve(predicted.size());
    for (const Warp& w : predicted) out.push_back(compose_warps(w, centering_warp));
    return out;
}

AlignmentResult run_deepjam(const std::vector<FunctionSample>& data, const JamConfig& cfg) {
    if (cfg.num_periods < 1) throw ValidationError("run_deepjam: K must be >= 1");
    if (cfg.outer_iterations < 1) throw ValidationError("run_deepjam: outer_iterations must be >= 1");
    cfg.karcher.validate();
    const int K = cfg.num_periods;
    const Grid grid = require_shared_unit_grid(data, K, "run_deepjam");
    const int n = static_cast<int>(data.size());
    const int J = data.front().channels();

    NetConfig net_cfg = cfg.net;
    net_cfg.input_points = grid.num_points;
    net_cfg.channels = J;
    net_cfg.validate();

    std::vector<SrsfSample> q(static_cast<std::size_t>(n));
    std::vector<MatrixXd> q_values(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        q[static_cast<std::size_t>(i)] = srsf(data[static_cast<std::size_t>(i)]);
        q_values[static_cast<std::size_t>(i)] = q[static_cast<std::size_t>(i)].values;
    }

    AlignmentResult result;
    result.net = init_params(net_cfg);
    result.total_warps.assign(static_cast<std::size_t>(n), identity_warp(grid));

    std::vector<int> everyone(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) everyone[static_cast<std::size_t>(i)] = i;

    SrsfSample mu_segments;  // one period, updated every iteration
    Warp segment_mean;       // mu_gamma of the last iteration

    for (int e = 0; e < cfg.outer_iterations; ++e) {
        // cross-sectional mean over all n*K warped SRSF segments, per channel
        MatrixXd seg_sum;
        Grid seg_grid = grid;
        for (int i = 0; i < n; ++i) {
            const SrsfSample warped = warp_srsf(q[static_cast<std::size_t>(i)], result.total_warps[static_cast<std::size_t>(i)]);
            for (const SrsfSample& seg : split_srsf(warped, K)) {
                if (seg_sum.size() == 0) {
                    seg_sum = MatrixXd::Zero(seg.values.rows(), seg.values.cols());
                    seg_grid = seg.grid;
                }
                seg_sum += seg.values;
            }
        }
        mu_segments = SrsfSample{seg_grid, seg_sum / static_cast<double>(n * K), VectorXd::Zero(J)};
        const SrsfSample mu_extended = extend_srsf(mu_segments, K);

        const double epoch_loss =
            train_epoch(result.net, q_values, mu_extended.values, grid, mix_seed(net_cfg.seed, 0xe70c0000ULL + static_cast<std::uint64_t>(e)));
        if (!std::isfinite(epoch_loss))
            throw RuntimeError("run_deepjam: non-finite loss at outer iteration " + std::to_string(e + 1));
        result.loss_history.push_back(epoch_loss);

        const std::vector<Warp> predicted = forward(result.net, q_values, everyone);
        CenterResult centered = center_warps(predicted, K, cfg.karcher);
        result.total_warps = std::move(centered.centered);
        result.centering_warp = centered.centering_warp;
        segment_mean = centered.segment_mean;

        std::vector<FunctionSample> aligned;
        aligned.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            aligned.push_back(warp_function(data[static_cast<std::size_t>(i)], result.total_warps[static_cast<std::size_t>(i)]));
        result.variance_history.push_back(ccsv(aligned).mean());
    }

    // mu_q = (mu_segments, mu_gamma^{-1} scaled to one period)
    const double tau = 1.0 / static_cast<double>(K);
    const Warp inv_mean_period = scale_warp(invert_warp(segment_mean), 0.0, tau, 0.0, tau);
    result.common_template_srsf = warp_srsf(mu_segments, inv_mean_period);
    result.common_template = extract_common_template(result.common_template_srsf, cfg.template_anchor_rule, data);

    result.local_means.reserve(static_cast<std::size_t>(n));
    result.global_warps.reserve(static_cast<std::size_t>(n));
    result.subject_templates.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const WarpDecomposition parts = decompose_total_warp(result.total_warps[static_cast<std::size_t>(i)], K, cfg.karcher);
        result.subject_templates.push_back(subject_template(q[static_cast<std::size_t>(i)],
                                                            data[static_cast<std::size_t>(i)],
                                                            result.common_template, parts, K,
                                                            cfg.subject_template_mode));
        result.local_means.push_back(parts.local_mean);
        result.global_warps.push_back(parts.global_part);
    }
    return result;
}

}  // namespace deepjam
