#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "deepjam/errors.hpp"

namespace deepjam {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Equidistant sampling grid over a closed interval, endpoints included.
struct Grid {
    int num_points = 0;
    double lo = 0.0;
    double hi = 1.0;

    Grid() = default;
    Grid(int num_points_, double lo_, double hi_) : num_points(num_points_), lo(lo_), hi(hi_) {
        if (num_points < 3) throw ValidationError("Grid: need at least 3 points, got " + std::to_string(num_points));
        if (!(hi > lo)) throw ValidationError("Grid: interval must have positive length");
    }

    static Grid unit(int num_points_) { return Grid(num_points_, 0.0, 1.0); }

    double length() const { return hi - lo; }
    double spacing() const { return (hi - lo) / static_cast<double>(num_points - 1); }
    double point(int p) const { return lo + spacing() * static_cast<double>(p); }

    VectorXd points() const {
        VectorXd t(num_points);
        for (int p = 0; p < num_points; ++p) t[p] = point(p);
        t[num_points - 1] = hi;
        return t;
    }

    bool same_as(const Grid& o, double tol = 1e-12) const {
        return num_points == o.num_points && std::abs(lo - o.lo) <= tol && std::abs(hi - o.hi) <= tol;
    }
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* where) {
    if (!a.same_as(b)) {
        throw ValidationError(std::string(where) + ": grid mismatch (" + std::to_string(a.num_points) + " pts on [" +
                              std::to_string(a.lo) + "," + std::to_string(a.hi) + "] vs " + std::to_string(b.num_points) +
                              " pts on [" + std::to_string(b.lo) + "," + std::to_string(b.hi) + "])");
    }
}

/// First derivative on the grid: central differences inside, second-order
/// one-sided at the two boundary points. The one scheme shared by the SRSF
/// transform and warp derivatives.
inline VectorXd derivative(const VectorXd& f, double dt) {
    const Eigen::Index n = f.size();
    VectorXd d(n);
    const double inv2 = 1.0 / (2.0 * dt);
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * inv2;
    for (Eigen::Index p = 1; p + 1 < n; ++p) d[p] = (f[p + 1] - f[p - 1]) * inv2;
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * inv2;
    return d;
}

/// Adjoint of `derivative` (transpose of the stencil matrix), used by backprop.
inline VectorXd derivative_transpose(const VectorXd& g, double dt) {
    const Eigen::Index n = g.size();
    VectorXd d = VectorXd::Zero(n);
    const double inv2 = 1.0 / (2.0 * dt);
    d[0] += -3.0 * g[0] * inv2;
    d[1] += 4.0 * g[0] * inv2;
    d[2] += -g[0] * inv2;
    for (Eigen::Index p = 1; p + 1 < n; ++p) {
        d[p + 1] += g[p] * inv2;
        d[p - 1] -= g[p] * inv2;
    }
    d[n - 1] += 3.0 * g[n - 1] * inv2;
    d[n - 2] += -4.0 * g[n - 1] * inv2;
    d[n - 3] += g[n - 1] * inv2;
    return d;
}

/// Trapezoidal quadrature weights (dt at interior points, dt/2 at the ends).
inline VectorXd trapezoid_weights(int num_points, double dt) {
    VectorXd w = VectorXd::Constant(num_points, dt);
    w[0] = 0.5 * dt;
    w[num_points - 1] = 0.5 * dt;
    return w;
}

inline double trapezoid(const VectorXd& f, double dt) {
    return (f.sum() - 0.5 * (f[0] + f[f.size() - 1])) * dt;
}

/// Running integral from the left endpoint, trapezoidal rule; out[0] = 0.
inline VectorXd cumulative_trapezoid(const VectorXd& f, double dt) {
    VectorXd out(f.size());
    out[0] = 0.0;
    for (Eigen::Index p = 1; p < f.size(); ++p) out[p] = out[p - 1] + 0.5 * dt * (f[p] + f[p - 1]);
    return out;
}

/// L2 inner product and norm under trapezoidal quadrature.
inline double l2_inner(const VectorXd& a, const VectorXd& b, double dt) {
    VectorXd prod = a.cwiseProduct(b);
    return trapezoid(prod, dt);
}

inline double l2_norm(const VectorXd& a, double dt) { return std::sqrt(std::max(0.0, l2_inner(a, a, dt))); }

/// Segment lookup for piecewise-linear interpolation on an equidistant grid.
/// Returns the index j of the segment [t_j, t_{j+1}] containing x, using the
/// left segment when x sits exactly on an interior knot.
inline Eigen::Index interp_segment(double x, const Grid& g) {
    const double rel = (x - g.lo) / g.spacing();
    Eigen::Index j = static_cast<Eigen::Index>(std::ceil(rel)) - 1;
    if (j < 0) j = 0;
    if (j > g.num_points - 2) j = g.num_points - 2;
    return j;
}

/// Linear interpolation of samples `f` on grid `g` at point x (clamped slope
/// extrapolation outside the domain, which callers avoid by construction).
inline double interp_linear(const VectorXd& f, const Grid& g, double x) {
    const Eigen::Index j = interp_segment(x, g);
    const double tj = g.point(static_cast<int>(j));
    const double slope = (f[j + 1] - f[j]) / g.spacing();
    return f[j] + slope * (x - tj);
}

/// Interpolate samples (xs, ys) with xs strictly increasing but not
/// necessarily equidistant, at query x. Used for warp inversion.
inline double interp_linear_irregular(const VectorXd& xs, const VectorXd& ys, double x) {
    const Eigen::Index n = xs.size();
    if (x <= xs[0]) return ys[0];
    if (x >= xs[n - 1]) return ys[n - 1];
    // binary search for the segment with xs[j] < x <= xs[j+1]
    Eigen::Index lo = 0, hi = n - 1;
    while (hi - lo > 1) {
        const Eigen::Index mid = (lo + hi) / 2;
        if (xs[mid] < x)
            lo = mid;
        else
            hi = mid;
    }
    const double w = (x - xs[lo]) / (xs[hi] - xs[lo]);
    return ys[lo] + w * (ys[hi] - ys[lo]);
}

}  // namespace deepjam
