#include "deepjam/fungrid.hpp"

#include <cmath>
#include <string>

namespace deepjam {

namespace {

void require_finite(const MatrixXd& m, const char* where) {
    if (!m.allFinite()) throw ValidationError(std::string(where) + ": non-finite values");
}

void require_zero_origin(const Grid& g, const char* where) {
    if (std::abs(g.lo) > 1e-15) throw ValidationError(std::string(where) + ": domain must start at 0");
}

PeriodStructure check_periods(const Grid& g, int num_periods, const char* where) {
    try {
        return PeriodStructure::infer(g, num_periods);
    } catch (const ValidationError& e) {
        throw ValidationError(std::string(where) + ": " + e.what());
    }
}

}  // namespace

void FunctionSample::validate(const char* where) const {
    if (values.rows() != grid.num_points)
        throw ValidationError(std::string(where) + ": value rows != grid points");
    if (values.cols() < 1) throw ValidationError(std::string(where) + ": need at least one channel");
    require_finite(values, where);
}

void SrsfSample::validate(const char* where) const {
    if (values.rows() != grid.num_points)
        throw ValidationError(std::string(where) + ": value rows != grid points");
    if (anchor.size() != values.cols())
        throw ValidationError(std::string(where) + ": anchor size != channel count");
    require_finite(values, where);
    if (!anchor.allFinite()) throw ValidationError(std::string(where) + ": non-finite anchor");
}

void Warp::validate(const char* where) const {
    if (values.size() != grid.num_points)
        throw ValidationError(std::string(where) + ": value count != grid points");
    if (values[0] != grid.lo || values[values.size() - 1] != grid.hi)
        throw ValidationError(std::string(where) + ": endpoints not boundary-preserving");
    const double margin = kMonotoneMarginScale * grid.length();
    for (Eigen::Index p = 0; p + 1 < values.size(); ++p) {
        if (!(values[p + 1] - values[p] > margin))
            throw ValidationError(std::string(where) + ": not strictly increasing at index " + std::to_string(p));
    }
}

PeriodStructure PeriodStructure::infer(const Grid& g, int num_periods) {
    if (num_periods < 1) throw ValidationError("PeriodStructure: K must be >= 1");
    if ((g.num_points - 1) % num_periods != 0)
        throw ValidationError("PeriodStructure: (P-1) = " + std::to_string(g.num_points - 1) +
                              " not divisible by K = " + std::to_string(num_periods));
    PeriodStructure ps;
    ps.num_periods = num_periods;
    ps.period_length = g.length() / static_cast<double>(num_periods);
    if (ps.points_per_segment(g) < 3)
        throw ValidationError("PeriodStructure: segments need at least 3 points");
    return ps;
}

Warp identity_warp(const Grid& g) {
    Warp w{g, g.points()};
    w.values[0] = g.lo;
    w.values[g.num_points - 1] = g.hi;
    return w;
}

SrsfSample srsf(const FunctionSample& f) {
    f.validate("srsf");
    const double dt = f.grid.spacing();
    MatrixXd q(f.values.rows(), f.values.cols());
    for (int j = 0; j < f.channels(); ++j) {
        VectorXd d = derivative(f.values.col(j), dt);
        for (Eigen::Index p = 0; p < d.size(); ++p) {
            const double v = d[p];
            q(p, j) = (v >= 0.0 ? 1.0 : -1.0) * std::sqrt(std::abs(v));
        }
    }
    return SrsfSample{f.grid, std::move(q), f.values.row(0).transpose()};
}

FunctionSample srsf_inverse(const SrsfSample& q) {
    q.validate("srsf_inverse");
    const double dt = q.grid.spacing();
    MatrixXd f(q.values.rows(), q.values.cols());
    for (int j = 0; j < q.channels(); ++j) {
        VectorXd integrand = q.values.col(j).cwiseProduct(q.values.col(j).cwiseAbs());
        f.col(j) = cumulative_trapezoid(integrand, dt).array() + q.anchor[j];
    }
    return FunctionSample{q.grid, std::move(f)};
}

SrsfSample warp_srsf(const SrsfSample& q, const Warp& gamma) {
    q.validate("warp_srsf");
    gamma.validate("warp_srsf");
    require_same_grid(q.grid, gamma.grid, "warp_srsf");
    const double dt = q.grid.spacing();
    // The one-sided stencil can undershoot zero at the two boundary points of
    // a steep valid warp; the floor keeps the action finite there.
    const VectorXd gdot = derivative(gamma.values, dt).cwiseMax(0.0);
    MatrixXd out(q.values.rows(), q.values.cols());
    for (Eigen::Index p = 0; p < q.values.rows(); ++p) {
        const double s = std::sqrt(gdot[p]);
        for (int j = 0; j < q.channels(); ++j)
            out(p, j) = interp_linear(q.values.col(j), q.grid, gamma.values[p]) * s;
    }
    return SrsfSample{q.grid, std::move(out), q.anchor};
}

FunctionSample warp_function(const FunctionSample& f, const Warp& gamma) {
    f.validate("warp_function");
    gamma.validate("warp_function");
    require_same_grid(f.grid, gamma.grid, "warp_function");
    MatrixXd out(f.values.rows(), f.values.cols());
    for (Eigen::Index p = 0; p < f.values.rows(); ++p)
        for (int j = 0; j < f.channels(); ++j)
            out(p, j) = interp_linear(f.values.col(j), f.grid, gamma.values[p]);
    return FunctionSample{f.grid, std::move(out)};
}

Warp compose_warps(const Warp& gamma1, const Warp& gamma2) {
    gamma1.validate("compose_warps");
    gamma2.validate("compose_warps");
    require_same_grid(gamma1.grid, gamma2.grid, "compose_warps");
    VectorXd out(gamma2.values.size());
    for (Eigen::Index p = 0; p < out.size(); ++p) out[p] = interp_linear(gamma1.values, gamma1.grid, gamma2.values[p]);
    out[0] = gamma1.grid.lo;
    out[out.size() - 1] = gamma1.grid.hi;
    Warp w{gamma1.grid, std::move(out)};
    w.validate("compose_warps result");
    return w;
}

Warp invert_warp(const Warp& gamma) {
    gamma.validate("invert_warp");
    const VectorXd t = gamma.grid.points();
    VectorXd out(t.size());
    for (Eigen::Index p = 0; p < t.size(); ++p) out[p] = interp_linear_irregular(gamma.values, t, t[p]);
    out[0] = gamma.grid.lo;
    out[out.size() - 1] = gamma.grid.hi;
    Warp w{gamma.grid, std::move(out)};
    w.validate("invert_warp result");
    return w;
}

Warp scale_warp(const Warp& gamma, double domain_lo, double domain_hi, double image_lo, double image_hi) {
    if (!(domain_hi > domain_lo) || !(image_hi > image_lo))
        throw ValidationError("scale_warp: target intervals must have positive length");
    const double v0 = gamma.image_lo();
    const double v1 = gamma.image_hi();
    if (!(v1 > v0)) throw ValidationError("scale_warp: degenerate image");
    const double scale = (image_hi - image_lo) / (v1 - v0);
    VectorXd out = (gamma.values.array() - v0) * scale + image_lo;
    out[0] = image_lo;
    out[out.size() - 1] = image_hi;
    Warp w{Grid(gamma.grid.num_points, domain_lo, domain_hi), std::move(out)};
    w.validate("scale_warp result");
    return w;
}

namespace {

MatrixXd extend_values(const MatrixXd& v, int K) {
    const Eigen::Index P = v.rows();
    MatrixXd out(K * (P - 1) + 1, v.cols());
    for (int k = 0; k < K; ++k) out.middleRows(k * (P - 1), P - 1) = v.topRows(P - 1);
    out.row(out.rows() - 1) = v.row(P - 1);
    return out;
}

}  // namespace

FunctionSample extend_function(const FunctionSample& f, int num_periods) {
    f.validate("extend_function");
    require_zero_origin(f.grid, "extend_function");
    if (num_periods < 1) throw ValidationError("extend_function: K must be >= 1");
    if (num_periods == 1) return f;
    Grid g(num_periods * (f.grid.num_points - 1) + 1, 0.0, num_periods * f.grid.length());
    return FunctionSample{g, extend_values(f.values, num_periods)};
}

SrsfSample extend_srsf(const SrsfSample& q, int num_periods) {
    q.validate("extend_srsf");
    require_zero_origin(q.grid, "extend_srsf");
    if (num_periods < 1) throw ValidationError("extend_srsf: K must be >= 1");
    if (num_periods == 1) return q;
    Grid g(num_periods * (q.grid.num_points - 1) + 1, 0.0, num_periods * q.grid.length());
    return SrsfSample{g, extend_values(q.values, num_periods), q.anchor};
}

Warp extend_warp(const Warp& gamma, int num_periods) {
    gamma.validate("extend_warp");
    require_zero_origin(gamma.grid, "extend_warp");
    if (num_periods < 1) throw ValidationError("extend_warp: K must be >= 1");
    if (num_periods == 1) return gamma;
    const int P = gamma.grid.num_points;
    const double tau = gamma.grid.length();
    Grid g(num_periods * (P - 1) + 1, 0.0, num_periods * tau);
    VectorXd out(g.num_points);
    for (int k = 0; k < num_periods; ++k) {
        const double shift = static_cast<double>(k) * tau;
        for (int p = 0; p + 1 < P; ++p) out[k * (P - 1) + p] = gamma.values[p] + shift;
    }
    out[g.num_points - 1] = g.hi;
    out[0] = 0.0;
    Warp w{g, std::move(out)};
    w.validate("extend_warp result");
    return w;
}

Warp extend_warp_unit(const Warp& gamma, int num_periods) {
    if (num_periods == 1) return gamma;
    return scale_warp(extend_warp(gamma, num_periods), 0.0, 1.0, 0.0, 1.0);
}

namespace {

template <typename MakeSegment>
void for_each_segment(const Grid& g, int K, MakeSegment&& make) {
    const int Ps = (g.num_points - 1) / K + 1;
    for (int k = 0; k < K; ++k) make(k, k * (Ps - 1), Ps);
}

}  // namespace

std::vector<FunctionSample> split_function(const FunctionSample& f, int num_periods) {
    f.validate("split_function");
    require_zero_origin(f.grid, "split_function");
    const PeriodStructure ps = check_periods(f.grid, num_periods, "split_function");
    std::vector<FunctionSample> out;
    out.reserve(num_periods);
    const Grid seg_grid(ps.points_per_segment(f.grid), 0.0, ps.period_length);
    for_each_segment(f.grid, num_periods, [&](int, int start, int Ps) {
        out.push_back(FunctionSample{seg_grid, f.values.middleRows(start, Ps)});
    });
    return out;
}

std::vector<SrsfSample> split_srsf(const SrsfSample& q, int num_periods) {
    q.validate("split_srsf");
    require_zero_origin(q.grid, "split_srsf");
    const PeriodStructure ps = check_periods(q.grid, num_periods, "split_srsf");
    std::vector<SrsfSample> out;
    out.reserve(num_periods);
    const Grid seg_grid(ps.points_per_segment(q.grid), 0.0, ps.period_length);
    const VectorXd zero_anchor = VectorXd::Zero(q.channels());
    for_each_segment(q.grid, num_periods, [&](int, int start, int Ps) {
        out.push_back(SrsfSample{seg_grid, q.values.middleRows(start, Ps), zero_anchor});
    });
    return out;
}

std::vector<Warp> split_warp(const Warp& gamma, int num_periods) {
    gamma.validate("split_warp");
    require_zero_origin(gamma.grid, "split_warp");
    const PeriodStructure ps = check_periods(gamma.grid, num_periods, "split_warp");
    const double tau = ps.period_length;
    std::vector<Warp> out;
    out.reserve(num_periods);
    const Grid seg_grid(ps.points_per_segment(gamma.grid), 0.0, tau);
    for_each_segment(gamma.grid, num_periods, [&](int k, int start, int Ps) {
        VectorXd seg = gamma.values.segment(start, Ps).array() - static_cast<double>(k) * tau;
        const double v0 = seg[0];
        const double v1 = seg[Ps - 1];
        if (!(v1 > v0)) throw ValidationError("split_warp: degenerate segment image");
        seg = (seg.array() - v0) * (tau / (v1 - v0));
        seg[0] = 0.0;
        seg[Ps - 1] = tau;
        Warp w{seg_grid, std::move(seg)};
        w.validate("split_warp segment");
        out.push_back(std::move(w));
    });
    return out;
}

}  // namespace deepjam
