#include "deepjam/metrics.hpp"

namespace deepjam {

namespace {

MatrixXd cross_sectional_mean(const std::vector<FunctionSample>& fs) {
    MatrixXd m = MatrixXd::Zero(fs.front().values.rows(), fs.front().values.cols());
    for (const FunctionSample& f : fs) m += f.values;
    return m / static_cast<double>(fs.size());
}

void check_sample_set(const std::vector<FunctionSample>& fs, std::size_t min_count, const char* where) {
    if (fs.size() < min_count)
        throw ValidationError(std::string(where) + ": need at least " + std::to_string(min_count) + " functions");
    for (const FunctionSample& f : fs) {
        f.validate(where);
        require_same_grid(fs.front().grid, f.grid, where);
        if (f.channels() != fs.front().channels()) throw ValidationError(std::string(where) + ": channel mismatch");
    }
}

}  // namespace

VectorXd ccsv(const std::vector<FunctionSample>& fs, const std::optional<FunctionSample>& reference) {
    check_sample_set(fs, 2, "ccsv");
    const Grid& grid = fs.front().grid;
    const int J = fs.front().channels();
    MatrixXd ref;
    if (reference.has_value()) {
        reference->validate("ccsv reference");
        require_same_grid(grid, reference->grid, "ccsv reference");
        if (reference->channels() != J) throw ValidationError("ccsv: reference channel mismatch");
        ref = reference->values;
    } else {
        ref = cross_sectional_mean(fs);
    }
    const VectorXd w = trapezoid_weights(grid.num_points, grid.spacing());
    VectorXd out = VectorXd::Zero(J);
    for (const FunctionSample& f : fs) {
        const MatrixXd r = f.values - ref;
        for (int j = 0; j < J; ++j) out[j] += w.dot(r.col(j).cwiseProduct(r.col(j)));
    }
    return out / static_cast<double>(fs.size() - 1);
}

VectorXd mean_template_distance(const std::vector<FunctionSample>& fs, const FunctionSample& mu) {
    check_sample_set(fs, 1, "mean_template_distance");
    mu.validate("mean_template_distance");
    require_same_grid(fs.front().grid, mu.grid, "mean_template_distance");
    if (mu.channels() != fs.front().channels()) throw ValidationError("mean_template_distance: channel mismatch");
    const MatrixXd diff = cross_sectional_mean(fs) - mu.values;
    const VectorXd w = trapezoid_weights(mu.grid.num_points, mu.grid.spacing());
    VectorXd out(mu.channels());
    for (int j = 0; j < mu.channels(); ++j) out[j] = w.dot(diff.col(j).cwiseProduct(diff.col(j)));
    return out;
}

VectorXd percent_reduction(const VectorXd& observed, const VectorXd& aligned) {
    VectorXd out(observed.size());
    for (Eigen::Index j = 0; j < observed.size(); ++j)
        out[j] = observed[j] > 0.0 ? 100.0 * (1.0 - aligned[j] / observed[j])
                                   : std::numeric_limits<double>::quiet_NaN();
    return out;
}

VarianceReport make_variance_report(const std::vector<FunctionSample>& observed,
                                    const std::vector<FunctionSample>& aligned,
                                    const std::optional<FunctionSample>& true_template) {
    VarianceReport report;
    report.observed_ccsv = ccsv(observed);
    report.aligned_ccsv = ccsv(aligned);
    report.ccsv_reduction_percent = percent_reduction(report.observed_ccsv, report.aligned_ccsv);
    if (true_template.has_value()) {
        report.observed_mean_distance = mean_template_distance(observed, *true_template);
        report.aligned_mean_distance = mean_template_distance(aligned, *true_template);
        report.mean_distance_reduction_percent =
            percent_reduction(report.observed_mean_distance, report.aligned_mean_distance);
    }
    return report;
}

}  // namespace deepjam
