#include "deepjam/warpnet.hpp"

#include <cmath>
#include <random>
#include <string>

namespace deepjam {

namespace {

constexpr double kSimplexFloor = 1e-9;
constexpr double kSqrtGradFloor = 1e-10;

double expit(double u) {
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int pad_left(int kernel_size) { return (kernel_size - 1) / 2; }

/// M(t, d*cin + c) = a(t + d - padL, c), zero outside [0, P).
void im2col(const MatrixXd& a, int kernel_size, MatrixXd& m) {
    const int P = static_cast<int>(a.rows());
    const int cin = static_cast<int>(a.cols());
    const int padL = pad_left(kernel_size);
    m.setZero(P, kernel_size * cin);
    for (int d = 0; d < kernel_size; ++d) {
        const int off = d - padL;
        const int s0 = std::max(0, -off);
        const int s1 = std::min(P, P - off);
        if (s1 <= s0) continue;
        m.block(s0, d * cin, s1 - s0, cin) = a.block(s0 + off, 0, s1 - s0, cin);
    }
}

void col2im_add(const MatrixXd& dm, int kernel_size, MatrixXd& da) {
    const int P = static_cast<int>(da.rows());
    const int cin = static_cast<int>(da.cols());
    const int padL = pad_left(kernel_size);
    for (int d = 0; d < kernel_size; ++d) {
        const int off = d - padL;
        const int s0 = std::max(0, -off);
        const int s1 = std::min(P, P - off);
        if (s1 <= s0) continue;
        da.block(s0 + off, 0, s1 - s0, cin) += dm.block(s0, d * cin, s1 - s0, cin);
    }
}

/// Raw network output for one subject plus the activation tape.
VectorXd conv_forward(const WarpNetParams& params, const MatrixXd& q, ConvTape* tape) {
    const int L = static_cast<int>(params.layers.size());
    if (tape) {
        tape->activations.clear();
        tape->activations.reserve(L + 1);
        tape->activations.push_back(q);
    }
    MatrixXd a = q;
    MatrixXd m;
    for (int l = 0; l < L; ++l) {
        const ConvLayer& layer = params.layers[l];
        im2col(a, layer.kernel_size, m);
        MatrixXd s = m * layer.weight;
        s.rowwise() += layer.bias.transpose();
        if (l + 1 < L) s = s.array().tanh();
        a = std::move(s);
        if (tape) tape->activations.push_back(a);
    }
    return a.col(0);
}

/// Loss contribution of one subject and its gradient w.r.t. the warp values.
double subject_loss(const MatrixXd& q, const MatrixXd& mu, const Warp& gamma, const Grid& grid, double weight_scale,
                    VectorXd* d_gamma) {
    const int P = grid.num_points;
    const int J = static_cast<int>(q.cols());
    const double dt = grid.spacing();
    const VectorXd w = trapezoid_weights(P, dt);
    const VectorXd gdot = derivative(gamma.values, dt);
    const VectorXd sq = gdot.cwiseMax(0.0).cwiseSqrt();

    double loss = 0.0;
    VectorXd d_gdot = d_gamma ? VectorXd::Zero(P) : VectorXd();
    if (d_gamma) d_gamma->setZero(P);

    for (int j = 0; j < J; ++j) {
        for (int p = 0; p < P; ++p) {
            const Eigen::Index seg = interp_segment(gamma.values[p], grid);
            const double slope = (q(seg + 1, j) - q(seg, j)) / dt;
            const double qg = q(seg, j) + slope * (gamma.values[p] - grid.point(static_cast<int>(seg)));
            const double a = qg * sq[p];
            const double r = a - mu(p, j);
            loss += weight_scale * w[p] * r * r;
            if (d_gamma) {
                const double da = 2.0 * weight_scale * w[p] * r;
                (*d_gamma)[p] += da * slope * sq[p];
                d_gdot[p] += da * qg * 0.5 / std::sqrt(std::max(gdot[p], kSqrtGradFloor));
            }
        }
    }
    if (d_gamma) *d_gamma += derivative_transpose(d_gdot, dt);
    return loss;
}

}  // namespace

void NetConfig::validate() const {
    if (input_points < 3) throw ValidationError("NetConfig: input_points must be >= 3");
    if (channels < 1) throw ValidationError("NetConfig: channels must be >= 1");
    if (num_layers < 1) throw ValidationError("NetConfig: num_layers must be >= 1");
    if (filters_per_hidden_layer < 1) throw ValidationError("NetConfig: filters_per_hidden_layer must be >= 1");
    if (kernel_size < 1 || kernel_size > input_points)
        throw ValidationError("NetConfig: kernel_size must be in [1, input_points]");
    if (!(learning_rate > 0.0)) throw ValidationError("NetConfig: learning_rate must be positive");
    if (batch_size < 1) throw ValidationError("NetConfig: batch_size must be >= 1");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
        throw ValidationError("NetConfig: Adam betas must be in [0,1)");
    if (!(adam_epsilon > 0.0)) throw ValidationError("NetConfig: Adam epsilon must be positive");
}

void WarpNetParams::validate() const {
    config.validate();
    if (static_cast<int>(layers.size()) != config.num_layers)
        throw ValidationError("WarpNetParams: layer count != config.num_layers");
    int cin = config.channels;
    for (size_t l = 0; l < layers.size(); ++l) {
        const ConvLayer& layer = layers[l];
        const int cout = (l + 1 == layers.size()) ? 1 : config.filters_per_hidden_layer;
        if (layer.kernel_size != config.kernel_size || layer.in_filters != cin || layer.out_filters != cout ||
            layer.weight.rows() != layer.kernel_size * cin || layer.weight.cols() != cout ||
            layer.bias.size() != cout)
            throw ValidationError("WarpNetParams: layer " + std::to_string(l) + " shape mismatch");
        if (!layer.weight.allFinite() || !layer.bias.allFinite())
            throw ValidationError("WarpNetParams: layer " + std::to_string(l) + " has non-finite parameters");
        cin = cout;
    }
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void deterministic_shuffle(std::vector<int>& indices, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = indices.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(indices[i - 1], indices[j]);
    }
}

WarpNetParams init_params(const NetConfig& cfg) {
    cfg.validate();
    WarpNetParams params;
    params.config = cfg;
    std::mt19937_64 rng(mix_seed(cfg.seed, 0x6e657469ULL));
    int cin = cfg.channels;
    for (int l = 0; l < cfg.num_layers; ++l) {
        const int cout = (l + 1 == cfg.num_layers) ? 1 : cfg.filters_per_hidden_layer;
        ConvLayer layer;
        layer.kernel_size = cfg.kernel_size;
        layer.in_filters = cin;
        layer.out_filters = cout;
        layer.weight.resize(cfg.kernel_size * cin, cout);
        layer.bias = VectorXd::Zero(cout);
        const double limit = std::sqrt(6.0 / static_cast<double>(cfg.kernel_size * cin + cfg.kernel_size * cout));
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
                layer.weight(r, c) = limit * (2.0 * uniform01(rng) - 1.0);
        if (l + 1 == cfg.num_layers) layer.weight.setZero();
        params.layers.push_back(std::move(layer));
        cin = cout;
    }
    for (const ConvLayer& layer : params.layers) {
        params.adam_m_weight.push_back(MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()));
        params.adam_v_weight.push_back(MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()));
        params.adam_m_bias.push_back(VectorXd::Zero(layer.bias.size()));
        params.adam_v_bias.push_back(VectorXd::Zero(layer.bias.size()));
    }
    return params;
}

NetGradients zero_gradients(const WarpNetParams& params) {
    NetGradients g;
    for (const ConvLayer& layer : params.layers) {
        g.d_weight.push_back(MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()));
        g.d_bias.push_back(VectorXd::Zero(layer.bias.size()));
    }
    return g;
}

Warp simplex_activation(const VectorXd& y, SimplexTape* tape) {
    const int P = static_cast<int>(y.size());
    if (P < 3) throw ValidationError("simplex_activation: need at least 3 points");
    if (!y.allFinite()) throw ValidationError("simplex_activation: non-finite input");

    VectorXd z(P);
    for (int p = 0; p < P; ++p) z[p] = expit(y[p] - std::log(static_cast<double>(P - p + 1)));

    VectorXd x(P + 1);
    VectorXd running(P);
    std::vector<char> clamped(P + 1, 0);
    double s = 0.0;
    for (int p = 0; p < P; ++p) {
        double xp = (1.0 - s) * z[p];
        if (xp < kSimplexFloor) {
            xp = kSimplexFloor;
            clamped[p] = 1;
        }
        x[p] = xp;
        s += xp;
        running[p] = s;
    }
    double xl = 1.0 - s;
    if (xl < kSimplexFloor) {
        xl = kSimplexFloor;
        clamped[P] = 1;
    }
    x[P] = xl;

    VectorXd cum(P + 2);
    cum[0] = 0.0;
    for (int p = 0; p < P + 1; ++p) cum[p + 1] = cum[p] + x[p];
    const double total = cum[P + 1];

    // resample the P+2-point graph onto P equidistant points of [0,1]
    VectorXd gamma(P);
    const double src_scale = static_cast<double>(P + 1) / static_cast<double>(P - 1);
    for (int p = 0; p < P; ++p) {
        const double pos = static_cast<double>(p) * src_scale;
        int j = static_cast<int>(std::floor(pos));
        if (j > P) j = P;
        const double w = pos - static_cast<double>(j);
        gamma[p] = ((1.0 - w) * cum[j] + w * cum[j + 1]) / total;
    }
    gamma[0] = 0.0;
    gamma[P - 1] = 1.0;

    if (tape) {
        tape->z = std::move(z);
        tape->x = std::move(x);
        tape->running_sum = std::move(running);
        tape->cumulative = std::move(cum);
        tape->total = total;
        tape->clamped = std::move(clamped);
    }
    Warp warp{Grid::unit(P), std::move(gamma)};
    warp.validate("simplex_activation result");
    return warp;
}

VectorXd simplex_backward(const VectorXd& d_gamma_in, const SimplexTape& tape) {
    const int P = static_cast<int>(d_gamma_in.size());
    VectorXd d_gamma = d_gamma_in;
    d_gamma[0] = 0.0;
    d_gamma[P - 1] = 0.0;

    // resample adjoint: P points back onto the P+2-point graph
    VectorXd dg = VectorXd::Zero(P + 2);
    const double src_scale = static_cast<double>(P + 1) / static_cast<double>(P - 1);
    for (int p = 0; p < P; ++p) {
        const double pos = static_cast<double>(p) * src_scale;
        int j = static_cast<int>(std::floor(pos));
        if (j > P) j = P;
        const double w = pos - static_cast<double>(j);
        dg[j] += d_gamma[p] * (1.0 - w);
        dg[j + 1] += d_gamma[p] * w;
    }

    // g = cum / total
    const double total = tape.total;
    VectorXd d_cum = dg / total;
    double d_total = 0.0;
    for (int m = 0; m < P + 2; ++m) d_total -= dg[m] * tape.cumulative[m] / (total * total);

    // cum[m] = sum_{p<m} x_p and total = sum of all x
    VectorXd dx(P + 1);
    double suffix = 0.0;
    for (int p = P; p >= 0; --p) {
        suffix += d_cum[p + 1];
        dx[p] = suffix + d_total;
    }

    // stick-breaking recursion
    VectorXd dz = VectorXd::Zero(P);
    double ds = tape.clamped[P] ? 0.0 : -dx[P];
    for (int p = P - 1; p >= 0; --p) {
        const double dxp = dx[p] + ds;
        const double s_prev = (p > 0) ? tape.running_sum[p - 1] : 0.0;
        if (!tape.clamped[p]) {
            dz[p] = dxp * (1.0 - s_prev);
            ds -= dxp * tape.z[p];
        }
    }
    return dz.cwiseProduct(tape.z.cwiseProduct(VectorXd::Ones(P) - tape.z));
}

std::vector<Warp> forward(const WarpNetParams& params, const std::vector<MatrixXd>& q_all,
                          const std::vector<int>& batch, NetTape* tape) {
    params.validate();
    std::vector<Warp> warps;
    warps.reserve(batch.size());
    if (tape) {
        tape->conv.assign(batch.size(), ConvTape{});
        tape->simplex.assign(batch.size(), SimplexTape{});
        tape->warps.clear();
    }
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const MatrixXd& q = q_all[static_cast<std::size_t>(batch[i])];
        if (q.rows() != params.config.input_points || q.cols() != params.config.channels)
            throw ValidationError("forward: subject " + std::to_string(batch[i]) + " shape mismatch");
        VectorXd y = conv_forward(params, q, tape ? &tape->conv[i] : nullptr);
        Warp w = simplex_activation(y, tape ? &tape->simplex[i] : nullptr);
        if (tape) tape->warps.push_back(w);
        warps.push_back(std::move(w));
    }
    return warps;
}

double fisher_rao_loss(const std::vector<MatrixXd>& q_all, const std::vector<int>& batch, const MatrixXd& mu,
                       const std::vector<Warp>& warps, const Grid& grid) {
    if (batch.size() != warps.size()) throw ValidationError("fisher_rao_loss: batch/warp count mismatch");
    if (mu.rows() != grid.num_points) throw ValidationError("fisher_rao_loss: template grid mismatch");
    const double scale = 1.0 / (static_cast<double>(batch.size()) * static_cast<double>(mu.cols()));
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const MatrixXd& q = q_all[static_cast<std::size_t>(batch[i])];
        if (q.cols() != mu.cols()) throw ValidationError("fisher_rao_loss: channel mismatch");
        require_same_grid(grid, warps[i].grid, "fisher_rao_loss");
        loss += subject_loss(q, mu, warps[i], grid, scale, nullptr);
    }
    return loss;
}

double backward(const WarpNetParams& params, const NetTape& tape, const std::vector<MatrixXd>& q_all,
                const std::vector<int>& batch, const MatrixXd& mu, const Grid& grid, NetGradients& grads) {
    const int L = static_cast<int>(params.layers.size());
    const double scale = 1.0 / (static_cast<double>(batch.size()) * static_cast<double>(mu.cols()));
    double loss = 0.0;
    VectorXd d_gamma;
    MatrixXd m, dm, ds;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const MatrixXd& q = q_all[static_cast<std::size_t>(batch[i])];
        loss += subject_loss(q, mu, tape.warps[i], grid, scale, &d_gamma);
        VectorXd dy = simplex_backward(d_gamma, tape.simplex[i]);
        ds = dy;
        for (int l = L - 1; l >= 0; --l) {
            const ConvLayer& layer = params.layers[l];
            const MatrixXd& a_in = tape.conv[i].activations[static_cast<std::size_t>(l)];
            if (l < L - 1) {
                const MatrixXd& a_out = tape.conv[i].activations[static_cast<std::size_t>(l) + 1];
                ds = ds.cwiseProduct(MatrixXd::Ones(a_out.rows(), a_out.cols()) - a_out.cwiseProduct(a_out));
            }
            im2col(a_in, layer.kernel_size, m);
            grads.d_weight[static_cast<std::size_t>(l)].noalias() += m.transpose() * ds;
            grads.d_bias[static_cast<std::size_t>(l)] += ds.colwise().sum().transpose();
            if (l > 0) {
                dm.noalias() = ds * layer.weight.transpose();
                MatrixXd da = MatrixXd::Zero(a_in.rows(), a_in.cols());
                col2im_add(dm, layer.kernel_size, da);
                ds = std::move(da);
            }
        }
    }
    for (int l = 0; l < L; ++l) {
        if (!grads.d_weight[static_cast<std::size_t>(l)].allFinite() ||
            !grads.d_bias[static_cast<std::size_t>(l)].allFinite())
            throw RuntimeError("backward: non-finite gradient in layer " + std::to_string(l));
    }
    return loss;
}

void adam_step(WarpNetParams& params, const NetGradients& grads) {
    const NetConfig& cfg = params.config;
    params.step_count += 1;
    const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(params.step_count));
    const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(params.step_count));
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        ConvLayer& layer = params.layers[l];
        MatrixXd& mw = params.adam_m_weight[l];
        MatrixXd& vw = params.adam_v_weight[l];
        mw = cfg.adam_beta1 * mw + (1.0 - cfg.adam_beta1) * grads.d_weight[l];
        vw = cfg.adam_beta2 * vw + (1.0 - cfg.adam_beta2) * grads.d_weight[l].cwiseProduct(grads.d_weight[l]);
        layer.weight.array() -=
            cfg.learning_rate * (mw.array() / c1) / ((vw.array() / c2).sqrt() + cfg.adam_epsilon);
        VectorXd& mb = params.adam_m_bias[l];
        VectorXd& vb = params.adam_v_bias[l];
        mb = cfg.adam_beta1 * mb + (1.0 - cfg.adam_beta1) * grads.d_bias[l];
        vb = cfg.adam_beta2 * vb + (1.0 - cfg.adam_beta2) * grads.d_bias[l].cwiseProduct(grads.d_bias[l]);
        layer.bias.array() -= cfg.learning_rate * (mb.array() / c1) / ((vb.array() / c2).sqrt() + cfg.adam_epsilon);
    }
}

double train_epoch(WarpNetParams& params, const std::vector<MatrixXd>& q_all, const MatrixXd& mu_extended,
                   const Grid& grid, std::uint64_t epoch_seed) {
    const int n = static_cast<int>(q_all.size());
    if (n == 0) throw ValidationError("train_epoch: empty dataset");
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    deterministic_shuffle(order, epoch_seed);

    double weighted_loss = 0.0;
    for (int start = 0; start < n; start += params.config.batch_size) {
        const int count = std::min(params.config.batch_size, n - start);
        std::vector<int> batch(order.begin() + start, order.begin() + start + count);
        NetTape tape;
        forward(params, q_all, batch, &tape);
        NetGradients grads = zero_gradients(params);
        const double batch_loss = backward(params, tape, q_all, batch, mu_extended, grid, grads);
        if (!std::isfinite(batch_loss)) throw RuntimeError("train_epoch: non-finite batch loss");
        adam_step(params, grads);
        weighted_loss += batch_loss * static_cast<double>(count);
    }
    return weighted_loss / static_cast<double>(n);
}

}  // namespace deepjam
