#include "deepjam/simgen.hpp"

#include <cmath>
#include <functional>
#include <string>

#include "deepjam/warpnet.hpp"

namespace deepjam {

namespace {

constexpr int kMaxWarpRetries = 1000;

SplitCounts make_split(const SimConfig& cfg) {
    const double n = static_cast<double>(cfg.n_total);
    SplitCounts s;
    const long c1 = std::lround(n * cfg.train_fraction);
    const long c2 = std::lround(n * (cfg.train_fraction + cfg.tune_fraction));
    const long c3 = std::lround(n * (cfg.train_fraction + cfg.tune_fraction + cfg.validation_fraction));
    s.train = static_cast<int>(c1);
    s.tune = static_cast<int>(c2 - c1);
    s.validation = static_cast<int>(c3 - c2);
    s.test = cfg.n_total - static_cast<int>(c3);
    return s;
}

double normal_pdf(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * M_PI));
}

struct AffineMap {
    double scale = 1.0;
    double offset = 0.0;
    double operator()(double v) const { return scale * v + offset; }
};

/// Affine map sending the extrema of `f` over [0, len] (dense evaluation)
/// onto [-1, 1].
AffineMap to_unit_band(const std::function<double(double)>& f, double len) {
    const int dense = 20001;
    double lo = f(0.0), hi = lo;
    for (int i = 1; i < dense; ++i) {
        const double v = f(len * static_cast<double>(i) / static_cast<double>(dense - 1));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    AffineMap m;
    m.scale = 2.0 / (hi - lo);
    m.offset = -1.0 - m.scale * lo;
    return m;
}

struct RawWarps {
    std::vector<Warp> locals;
    std::vector<Warp> globals;
    MatrixXd amplitudes;  // n x 18 (scenario 2), otherwise 0 x 0
};

/// Per-subject substreams off the master seed, so generation order (or
/// parallelism) cannot change the draws.
RawWarps draw_warps(const SimConfig& cfg, bool with_amplitudes) {
    const Grid period_grid = Grid::unit(cfg.points_per_period);
    const Grid full_grid = Grid::unit(cfg.total_points());
    RawWarps out;
    out.locals.reserve(static_cast<std::size_t>(cfg.n_total));
    out.globals.reserve(static_cast<std::size_t>(cfg.n_total));
    if (with_amplitudes) out.amplitudes.resize(cfg.n_total, 18);
    for (int i = 0; i < cfg.n_total; ++i) {
        RandomStream rng(mix_seed(cfg.seed, 0x5157u + static_cast<std::uint64_t>(i)));
        out.locals.push_back(random_warp(period_grid, cfg.warp_roughness, cfg.basis_size, rng));
        out.globals.push_back(random_warp(full_grid, cfg.warp_roughness, cfg.basis_size, rng));
        if (with_amplitudes)
            for (int p = 0; p < 18; ++p) out.amplitudes(i, p) = rng.gaussian(1.0, 0.25);
    }
    return out;
}

using ChannelFn = std::function<double(double t, const Eigen::RowVectorXd& z)>;

SimDataset assemble(const SimConfig& cfg, int scenario, const std::vector<ChannelFn>& channels,
                    const std::vector<ChannelFn>& template_channels, RawWarps&& raw) {
    const int P = cfg.total_points();
    const int K = cfg.num_periods;
    const int J = static_cast<int>(channels.size());
    const Grid full_grid = Grid::unit(P);

    CenteredWarpSet centered = center_warp_set(raw.locals, raw.globals, K);

    SimDataset ds;
    ds.scenario = scenario;
    ds.num_periods = K;
    ds.split = make_split(cfg);
    ds.amplitude_factors = std::move(raw.amplitudes);
    ds.true_local = std::move(centered.locals);
    ds.true_global = std::move(centered.globals);
    ds.true_total = std::move(centered.totals);

    const Eigen::RowVectorXd unit_z = Eigen::RowVectorXd::Ones(18);
    ds.functions.reserve(static_cast<std::size_t>(cfg.n_total));
    for (int i = 0; i < cfg.n_total; ++i) {
        const Eigen::RowVectorXd z =
            ds.amplitude_factors.size() > 0 ? Eigen::RowVectorXd(ds.amplitude_factors.row(i)) : unit_z;
        MatrixXd values(P, J);
        const Warp& total = ds.true_total[static_cast<std::size_t>(i)];
        for (int p = 0; p < P; ++p)
            for (int j = 0; j < J; ++j) values(p, j) = channels[static_cast<std::size_t>(j)](total.values[p], z);
        ds.functions.push_back(FunctionSample{full_grid, std::move(values)});
    }

    const Grid template_grid(cfg.points_per_period, 0.0, 1.0 / static_cast<double>(K));
    MatrixXd tmpl(cfg.points_per_period, J);
    for (int p = 0; p < cfg.points_per_period; ++p) {
        const double t = template_grid.point(p);
        for (int j = 0; j < J; ++j) tmpl(p, j) = template_channels[static_cast<std::size_t>(j)](t, unit_z);
    }
    ds.common_template = FunctionSample{template_grid, std::move(tmpl)};
    return ds;
}

}  // namespace

void SimConfig::validate() const {
    if (n_total < 1) throw ValidationError("SimConfig: n_total must be >= 1");
    const double fsum = train_fraction + tune_fraction + validation_fraction + test_fraction;
    if (train_fraction < 0 || tune_fraction < 0 || validation_fraction < 0 || test_fraction < 0 ||
        std::abs(fsum - 1.0) > 1e-9)
        throw ValidationError("SimConfig: split fractions must be nonnegative and sum to 1");
    if (num_periods < 1) throw ValidationError("SimConfig: K must be >= 1");
    if (points_per_period < 3) throw ValidationError("SimConfig: points_per_period must be >= 3");
    if (warp_roughness < 0.0) throw ValidationError("SimConfig: warp_roughness must be nonnegative");
    if (basis_size < 1) throw ValidationError("SimConfig: basis_size must be >= 1");
}

Warp random_warp(const Grid& grid, double roughness, int basis_size, RandomStream& rng) {
    const VectorXd t = grid.points();
    const PsiPoint base{grid, VectorXd::Ones(grid.num_points)};
    for (int attempt = 0; attempt < kMaxWarpRetries; ++attempt) {
        VectorXd v = VectorXd::Zero(grid.num_points);
        for (int m = 1; m <= basis_size; ++m) {
            const double a = rng.gaussian(0.0, roughness / static_cast<double>(m));
            for (int p = 0; p < grid.num_points; ++p)
                v[p] += a * std::sqrt(2.0) * std::sin(2.0 * M_PI * static_cast<double>(m) * t[p]);
        }
        try {
            return psi_to_warp(exp_map(base, TangentVector{grid, std::move(v)}, 1.0));
        } catch (const RuntimeError&) {
            // left the positive orthant; draw again
        }
    }
    throw RuntimeError("random_warp: exceeded retry budget (roughness too large?)");
}

CenteredWarpSet center_warp_set(const std::vector<Warp>& locals, const std::vector<Warp>& globals, int num_periods,
                                const KarcherConfig& karcher) {
    if (locals.size() != globals.size()) throw ValidationError("center_warp_set: list size mismatch");
    CenteredWarpSet out;
    out.locals.reserve(locals.size());
    out.globals.reserve(locals.size());
    out.totals.reserve(locals.size());
    for (std::size_t i = 0; i < locals.size(); ++i) {
        const Warp total = compose_warps(extend_warp_unit(locals[i], num_periods), globals[i]);
        const Warp aligning = invert_warp(total);
        std::vector<Warp> segments;
        segments.reserve(static_cast<std::size_t>(num_periods));
        for (Warp& seg : split_warp(aligning, num_periods)) segments.push_back(scale_warp(seg, 0.0, 1.0, 0.0, 1.0));
        const Warp seg_mean = karcher_mean_warps(segments, karcher).mean;
        Warp new_local = invert_warp(seg_mean);
        Warp new_global = compose_warps(extend_warp_unit(seg_mean, num_periods), total);
        out.totals.push_back(compose_warps(extend_warp_unit(new_local, num_periods), new_global));
        out.locals.push_back(std::move(new_local));
        out.globals.push_back(std::move(new_global));
    }
    return out;
}

SimDataset scenario1(const SimConfig& cfg) {
    cfg.validate();
    const double K = static_cast<double>(cfg.num_periods);
    const ChannelFn sine = [K](double t, const Eigen::RowVectorXd&) { return std::sin(2.0 * M_PI * K * t); };
    const ChannelFn tmpl = [K](double t, const Eigen::RowVectorXd&) { return std::sin(2.0 * M_PI * K * t); };
    return assemble(cfg, 1, {sine}, {tmpl}, draw_warps(cfg, false));
}

SimDataset scenario2(const SimConfig& cfg) {
    cfg.validate();
    if (cfg.num_periods != 3)
        throw ValidationError("scenario2: the trivariate generator is defined for K = 3 periods");
    const double K = 3.0;

    // channel 1: per-period scaled sine
    const ChannelFn y1 = [K](double t, const Eigen::RowVectorXd& z) {
        const int k = std::min(static_cast<int>(t * K), 2);
        return z[k] * std::sin(2.0 * M_PI * K * t);
    };

    using scenario2_detail::channel2_raw;
    using scenario2_detail::channel3_raw;
    const AffineMap band2 = to_unit_band([](double u) { return channel2_raw(u, 1.0, 1.0); }, 6.0);
    const ChannelFn y2 = [=](double t, const Eigen::RowVectorXd& z) {
        const double s = t * K * 6.0;
        const int k = std::min(static_cast<int>(s / 6.0), 2);
        const double u = s - 6.0 * static_cast<double>(k);
        return band2(channel2_raw(u, z[3 + 2 * k], z[4 + 2 * k]));
    };

    const AffineMap band3 = to_unit_band([](double u) { return channel3_raw(u, 1.0, 1.0, 1.0); }, 1.0);
    const ChannelFn y3 = [=](double t, const Eigen::RowVectorXd& z) {
        const double s = t * K;
        const int k = std::min(static_cast<int>(s), 2);
        const double u = s - static_cast<double>(k);
        return band3(channel3_raw(u, z[9 + 3 * k], z[10 + 3 * k], z[11 + 3 * k]));
    };

    const ChannelFn t1 = [K](double t, const Eigen::RowVectorXd&) { return std::sin(2.0 * M_PI * K * t); };
    const ChannelFn t2 = [=](double t, const Eigen::RowVectorXd&) { return band2(channel2_raw(t * K * 6.0, 1.0, 1.0)); };
    const ChannelFn t3 = [=](double t, const Eigen::RowVectorXd&) { return band3(channel3_raw(t * K, 1.0, 1.0, 1.0)); };

    return assemble(cfg, 2, {y1, y2, y3}, {t1, t2, t3}, draw_warps(cfg, true));
}


namespace scenario2_detail {

// Two Gaussian bumps, each mixed against the line through its own
// period-boundary values; scaling a bump then never moves the boundary
// values, which keeps the concatenated periods continuous.
double channel2_raw(double u, double z_a, double z_b) {
    const double A = std::exp(-0.5 * 4.5 * 4.5);
    const double B = std::exp(-0.5 * 1.5 * 1.5);
    const double bump45 = std::exp(-0.5 * (u - 4.5) * (u - 4.5));
    const double bump15 = std::exp(-0.5 * (u - 1.5) * (u - 1.5));
    const double lineA = (B - A) * u / 6.0 + A;  // interpolates bump45 at u = 0, 6
    const double lineB = (A - B) * u / 6.0 + B;  // interpolates bump15 at u = 0, 6
    return z_a * (bump45 - lineA) + lineA + z_b * (bump15 - lineB) + lineB;
}

double channel3_raw(double u, double z_a, double z_b, double z_c) {
    const double p1_0 = normal_pdf(0.0, 0.25, 0.1);
    const double p3_0 = normal_pdf(0.0, 0.75, 0.1);
    if (u < 0.5) return z_a * normal_pdf(u, 0.5, 0.15) - z_b * (normal_pdf(u, 0.25, 0.1) - p1_0);
    return z_a * normal_pdf(u, 0.5, 0.15) + z_c * (normal_pdf(u, 0.75, 0.1) - p3_0);
}

}  // namespace scenario2_detail

}  // namespace deepjam
