#pragma once

#include <vector>

#include "deepjam/grid.hpp"

namespace deepjam {

/// Discretized multivariate function on an equidistant grid.
/// Values are P x J (time along rows, one column per channel).
struct FunctionSample {
    Grid grid;
    MatrixXd values;

    int channels() const { return static_cast<int>(values.cols()); }
    void validate(const char* where = "FunctionSample") const;
};

/// Square-root slope representation of a FunctionSample. The anchor keeps the
/// initial values f(0) so the function can be reconstructed.
struct SrsfSample {
    Grid grid;
    MatrixXd values;
    VectorXd anchor;

    int channels() const { return static_cast<int>(values.cols()); }
    void validate(const char* where = "SrsfSample") const;
};

/// Discretized boundary-preserving strictly increasing warping function.
/// values[0] == grid.lo and values[P-1] == grid.hi hold exactly; increments
/// must exceed 1e-12 * (grid length).
struct Warp {
    Grid grid;
    VectorXd values;

    static constexpr double kMonotoneMarginScale = 1e-12;

    void validate(const char* where = "Warp") const;
    double image_lo() const { return values[0]; }
    double image_hi() const { return values[values.size() - 1]; }
};

/// Period bookkeeping for quasi-periodic samples: K periods of length tau
/// covering the grid domain, with (P-1) divisible by K.
struct PeriodStructure {
    int num_periods = 1;
    double period_length = 1.0;

    /// Number of points per period segment (shared endpoints included).
    int points_per_segment(const Grid& g) const { return (g.num_points - 1) / num_periods + 1; }

    static PeriodStructure infer(const Grid& g, int num_periods);
};

Warp identity_warp(const Grid& g);

/// q = sign(f') sqrt(|f'|), per channel; anchor = f(0).
SrsfSample srsf(const FunctionSample& f);

/// f(t) = anchor + int_0^t q|q|, trapezoidal rule per channel.
FunctionSample srsf_inverse(const SrsfSample& q);

/// Group action (q, gamma) = (q o gamma) sqrt(gamma'), per channel.
SrsfSample warp_srsf(const SrsfSample& q, const Warp& gamma);

/// Elementwise composition f o gamma by linear interpolation.
FunctionSample warp_function(const FunctionSample& f, const Warp& gamma);

/// gamma1 o gamma2 by linear interpolation, endpoints re-pinned.
Warp compose_warps(const Warp& gamma1, const Warp& gamma2);

/// Interpolated inverse (axes of the graph swapped), endpoints re-pinned.
Warp invert_warp(const Warp& gamma);

/// Affine rescale of domain and image. Image endpoints are taken from the
/// warp's own boundary values, so this also normalizes split segments.
Warp scale_warp(const Warp& gamma, double domain_lo, double domain_hi, double image_lo, double image_hi);

/// K concatenated copies; final point set to f(tau). Output domain is
/// [0, K * input length] with K*(P-1)+1 points. Requires grid.lo == 0.
FunctionSample extend_function(const FunctionSample& f, int num_periods);
SrsfSample extend_srsf(const SrsfSample& q, int num_periods);

/// (ext gamma)(t + k tau) = gamma(t) + k tau on [0, K tau]. Requires a
/// boundary-preserving warp with grid.lo == 0.
Warp extend_warp(const Warp& gamma, int num_periods);

/// Periodic extension of a [0,1]-warp with the result rescaled back onto
/// [0,1] x [0,1] (the transform mandated after every extension).
Warp extend_warp_unit(const Warp& gamma, int num_periods);

/// K segments on [0, tau], shared interior endpoints duplicated.
std::vector<FunctionSample> split_function(const FunctionSample& f, int num_periods);

/// Split of an SRSF sample. Segment anchors are zeroed: reconstruction of
/// segment-level SRSFs picks its constant explicitly (see jam templates).
std::vector<SrsfSample> split_srsf(const SrsfSample& q, int num_periods);

/// Split of a warp: each segment is image-shifted by -(k-1) tau (the dual of
/// extension) and then affinely pinned onto [0, tau] x [0, tau], so every
/// returned segment is a valid boundary-preserving warp.
std::vector<Warp> split_warp(const Warp& gamma, int num_periods);

}  // namespace deepjam
