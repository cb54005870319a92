#pragma once

#include <cstdint>
#include <vector>

#include "deepjam/fungrid.hpp"

namespace deepjam {

/// Architecture and optimizer settings of the warping network.
struct NetConfig {
    int input_points = 0;            // P
    int channels = 1;                // J
    int num_layers = 2;              // conv layers including the single-filter output layer
    int filters_per_hidden_layer = 8;
    int kernel_size = 3;
    double learning_rate = 1e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    int batch_size = 16;
    std::uint64_t seed = 0;

    void validate() const;
};

/// One convolutional layer. The kernel tensor (kernel_size x in x out) is
/// stored as a (kernel_size*in) x out matrix with row index d*in + c, ready
/// for the im2col product.
struct ConvLayer {
    int kernel_size = 0;
    int in_filters = 0;
    int out_filters = 0;
    MatrixXd weight;
    VectorXd bias;
};

/// Network parameters plus Adam accumulators.
struct WarpNetParams {
    NetConfig config;
    std::vector<ConvLayer> layers;
    std::vector<MatrixXd> adam_m_weight, adam_v_weight;
    std::vector<VectorXd> adam_m_bias, adam_v_bias;
    std::int64_t step_count = 0;

    void validate() const;
};

/// Glorot-uniform initialization from the config seed; the output layer is
/// zeroed so every subject starts at the identity warp.
WarpNetParams init_params(const NetConfig& cfg);

struct NetGradients {
    std::vector<MatrixXd> d_weight;
    std::vector<VectorXd> d_bias;
};
NetGradients zero_gradients(const WarpNetParams& params);

/// Per-subject intermediates recorded by the forward pass.
struct ConvTape {
    std::vector<MatrixXd> activations;  // [0] = input, [l] = output of layer l (post tanh on hidden layers)
};

struct SimplexTape {
    VectorXd z;            // expit coordinates, size P
    VectorXd x;            // simplex vector, size P+1 (after clamping)
    VectorXd running_sum;  // running sums of x[0..p], size P
    VectorXd cumulative;   // cumsum with leading zero, size P+2
    double total = 1.0;    // cumulative[P+1], the normalizer
    std::vector<char> clamped;  // size P+1
};

struct NetTape {
    std::vector<ConvTape> conv;        // one per subject in the batch
    std::vector<SimplexTape> simplex;  // one per subject
    std::vector<Warp> warps;           // one per subject
};

/// Unit-simplex output activation: y -> z -> x -> cumulative sum on P+2
/// points -> linear resample to P points on [0,1]. Valid (strictly
/// increasing, endpoint-exact) for arbitrary finite y.
Warp simplex_activation(const VectorXd& y, SimplexTape* tape = nullptr);

/// Chain rule through simplex_activation: gradient w.r.t. the raw output y.
VectorXd simplex_backward(const VectorXd& d_gamma, const SimplexTape& tape);

/// Conv stack + simplex for each subject of the batch; one warp per subject,
/// shared by all channels.
std::vector<Warp> forward(const WarpNetParams& params, const std::vector<MatrixXd>& q_all,
                          const std::vector<int>& batch, NetTape* tape = nullptr);

/// (1/n') sum_i (1/J) sum_j ||mu_j - (q_ij, gamma_i)||^2, trapezoidal norms.
double fisher_rao_loss(const std::vector<MatrixXd>& q_all, const std::vector<int>& batch, const MatrixXd& mu,
                       const std::vector<Warp>& warps, const Grid& grid);

/// Reverse pass of the whole loss: through the warp action, the simplex
/// activation and the conv stack. Returns the batch loss; non-finite
/// gradients abort with the offending layer.
double backward(const WarpNetParams& params, const NetTape& tape, const std::vector<MatrixXd>& q_all,
                const std::vector<int>& batch, const MatrixXd& mu, const Grid& grid, NetGradients& grads);

void adam_step(WarpNetParams& params, const NetGradients& grads);

/// One pass over seeded shuffled batches; returns the epoch-mean loss.
double train_epoch(WarpNetParams& params, const std::vector<MatrixXd>& q_all, const MatrixXd& mu_extended,
                   const Grid& grid, std::uint64_t epoch_seed);

/// Deterministic in-place Fisher-Yates shuffle (shared by training and data
/// splitting so results do not depend on the standard library).
void deterministic_shuffle(std::vector<int>& indices, std::uint64_t seed);

/// SplitMix64 stream mixing, used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace deepjam
