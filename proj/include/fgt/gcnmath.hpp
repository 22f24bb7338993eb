#pragma once

#include <cstdint>
#include <random>
#include <utility>

#include "fgt/matrix.hpp"
#include "fgt/syngraph.hpp"

namespace fgt {

enum class Activation { none, relu, softmax_rows };

/// Two-layer GCN parameters: w0 is the input-to-hidden map (C×H), w1 the
/// hidden-to-output map (H×F).
struct GcnParams {
    Mat w0;
    Mat w1;
    Activation hidden_activation = Activation::relu;
    Activation output_activation = Activation::none;
};

struct RegConfig {
    double lambda = 0.0;     // weighting factor, must be >= 0
    double base_loss = 0.0;  // externally supplied supervised loss
};

/// Row-wise softmax with max-subtraction. Rows sum to 1.
Mat softmax_rows(const Mat& m);

Mat apply_activation(const Mat& m, Activation act);

/// One propagation step: act(A_hat · H_in · W), associated as A_hat · (H_in · W).
Mat gcn_layer(const Mat& h_in, const Mat& a_hat, const Mat& w, Activation act);

/// Two-layer forward: out_act(A_hat · relu(A_hat · X · W0) · W1).
Mat gcn_forward(const Mat& x, const Mat& a_hat, const GcnParams& params);

/// Mean-aggregation form: per node, relu(mean over A_tilde-neighbors
/// (self included) of h_u, times W).
Mat mean_aggregate_layer(const Mat& h_in, const SynGraph& graph, const Mat& w);

/// Returns (total, penalty): penalty sums A_ij · ‖F_i − F_j‖² over ordered
/// pairs, total = base_loss + lambda · penalty. For symmetric A the penalty
/// equals 2·trace(FᵀΔF).
std::pair<double, double> laplacian_penalty(const Mat& f_out, const Mat& a, const RegConfig& cfg);

struct GcnGradients {
    Mat w0;
    Mat w1;
    Mat x;
};

/// Reverse-mode gradients of sum(upstream ⊙ gcn_forward(X)) with respect to
/// W0, W1 and X, including the ReLU mask and the row-softmax Jacobian.
GcnGradients gcn_gradients(const Mat& x, const Mat& a_hat, const GcnParams& params,
                           const Mat& upstream);

/// Uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)] with fan_in = rows; draw
/// order is row-major from the given generator.
Mat fan_in_init(std::size_t rows, std::size_t cols, std::mt19937_64& gen);

GcnParams init_gcn_params(std::size_t in_dim, std::size_t hidden_dim, std::size_t out_dim,
                          Activation output_activation, std::uint64_t seed);

}  // namespace fgt
