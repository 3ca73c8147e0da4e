#pragma once

#include <span>

#include "ghrl/nn/matrix.hpp"

// Batch losses over network outputs. Each returns the scalar loss (mean over
// the batch) and writes d(loss)/d(output) into `grad`, shaped like the output.
namespace ghrl::nn {

struct PolicyLossStats {
  double loss = 0.0;         // surrogate - entropy_coef * entropy
  double surrogate = 0.0;    // -mean(min(r A, clip(r) A))
  double entropy = 0.0;      // mean entropy
  double approx_kl = 0.0;    // mean((r - 1) - log r)
  double clip_fraction = 0.0;
};

// Clipped PPO surrogate on logits [B x A]. When the clipped and unclipped
// terms tie the unclipped branch carries the gradient.
PolicyLossStats ppo_policy_loss(const Matrix& logits, std::span<const int> actions,
                                std::span<const double> old_log_probs,
                                std::span<const double> advantages, double clip,
                                double entropy_coef, Matrix& grad);

// mean((v - target)^2) on values [B x 1].
double value_mse(const Matrix& values, std::span<const double> targets, Matrix& grad);

// mean over rows of -sum_a target_a * log softmax(logits)_a; targets [B x A].
double advice_cross_entropy(const Matrix& logits, const Matrix& targets, Matrix& grad);

// mean((out[b, a_b] - target_b)^2); only the taken action's output is trained.
double feedback_masked_mse(const Matrix& outputs, std::span<const int> actions,
                           std::span<const double> targets, Matrix& grad);

double softplus(double x);

// mean((softplus(raw) - target)^2) on raw outputs [B x 1].
double discrepancy_mse(const Matrix& raw, std::span<const double> targets, Matrix& grad);

}  // namespace ghrl::nn
