#include "ghrl/nn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ghrl/errors.hpp"
#include "ghrl/nn/categorical.hpp"

namespace ghrl::nn {

namespace {

void check_rows(const Matrix& m, std::size_t n, const char* what) {
  if (m.rows() != n || n == 0) throw ShapeError(std::string(what) + ": batch size mismatch");
}

}  // namespace

PolicyLossStats ppo_policy_loss(const Matrix& logits, std::span<const int> actions,
                                std::span<const double> old_log_probs,
                                std::span<const double> advantages, double clip,
                                double entropy_coef, Matrix& grad) {
  const std::size_t batch = logits.rows();
  const std::size_t k = logits.cols();
  check_rows(logits, actions.size(), "ppo_policy_loss");
  if (old_log_probs.size() != batch || advantages.size() != batch) {
    throw ShapeError("ppo_policy_loss: batch size mismatch");
  }
  grad.resize(batch, k);
  PolicyLossStats s;
  const double inv_b = 1.0 / static_cast<double>(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::vector<double> logp = log_softmax(logits.row(b));
    const auto a = static_cast<std::size_t>(actions[b]);
    if (a >= k) throw ShapeError("ppo_policy_loss: action out of range");
    const double log_ratio = logp[a] - old_log_probs[b];
    const double ratio = std::exp(log_ratio);
    const double adv = advantages[b];
    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * adv;
    const bool use_unclipped = unclipped <= clipped;
    s.surrogate -= std::min(unclipped, clipped) * inv_b;
    s.approx_kl += ((ratio - 1.0) - log_ratio) * inv_b;
    if (std::abs(ratio - 1.0) > clip) s.clip_fraction += inv_b;

    double h = 0.0;
    for (std::size_t j = 0; j < k; ++j) h -= std::exp(logp[j]) * logp[j];
    s.entropy += h * inv_b;

    // d(-min)/dlogit_j = -A r (1{j=a} - p_j) on the unclipped branch.
    const double coef = use_unclipped ? -adv * ratio * inv_b : 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double p = std::exp(logp[j]);
      double g = coef * ((j == a ? 1.0 : 0.0) - p);
      // d(-c H)/dlogit_j = c p_j (log p_j + H)
      g += entropy_coef * p * (logp[j] + h) * inv_b;
      grad(b, j) = g;
    }
  }
  s.loss = s.surrogate - entropy_coef * s.entropy;
  return s;
}

double value_mse(const Matrix& values, std::span<const double> targets, Matrix& grad) {
  check_rows(values, targets.size(), "value_mse");
  if (values.cols() != 1) throw ShapeError("value_mse: expected one output");
  const std::size_t batch = values.rows();
  grad.resize(batch, 1);
  const double inv_b = 1.0 / static_cast<double>(batch);
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const double e = values(b, 0) - targets[b];
    loss += e * e * inv_b;
    grad(b, 0) = 2.0 * e * inv_b;
  }
  return loss;
}

double advice_cross_entropy(const Matrix& logits, const Matrix& targets, Matrix& grad) {
  check_rows(logits, targets.rows(), "advice_cross_entropy");
  if (logits.cols() != targets.cols()) throw ShapeError("advice_cross_entropy: width mismatch");
  const std::size_t batch = logits.rows();
  const std::size_t k = logits.cols();
  grad.resize(batch, k);
  const double inv_b = 1.0 / static_cast<double>(batch);
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const std::vector<double> logp = log_softmax(logits.row(b));
    double mass = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      loss -= targets(b, j) * logp[j] * inv_b;
      mass += targets(b, j);
    }
    for (std::size_t j = 0; j < k; ++j) {
      grad(b, j) = (mass * std::exp(logp[j]) - targets(b, j)) * inv_b;
    }
  }
  return loss;
}

double feedback_masked_mse(const Matrix& outputs, std::span<const int> actions,
                           std::span<const double> targets, Matrix& grad) {
  check_rows(outputs, actions.size(), "feedback_masked_mse");
  if (targets.size() != actions.size()) throw ShapeError("feedback_masked_mse: batch size mismatch");
  const std::size_t batch = outputs.rows();
  grad.resize(batch, outputs.cols());
  const double inv_b = 1.0 / static_cast<double>(batch);
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const auto a = static_cast<std::size_t>(actions[b]);
    if (a >= outputs.cols()) throw ShapeError("feedback_masked_mse: action out of range");
    const double e = outputs(b, a) - targets[b];
    loss += e * e * inv_b;
    grad(b, a) = 2.0 * e * inv_b;
  }
  return loss;
}

double softplus(double x) {
  // log(1 + e^x) without overflow
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double discrepancy_mse(const Matrix& raw, std::span<const double> targets, Matrix& grad) {
  check_rows(raw, targets.size(), "discrepancy_mse");
  if (raw.cols() != 1) throw ShapeError("discrepancy_mse: expected one output");
  const std::size_t batch = raw.rows();
  grad.resize(batch, 1);
  const double inv_b = 1.0 / static_cast<double>(batch);
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const double z = raw(b, 0);
    const double e = softplus(z) - targets[b];
    const double sigmoid = 1.0 / (1.0 + std::exp(-z));
    loss += e * e * inv_b;
    grad(b, 0) = 2.0 * e * sigmoid * inv_b;
  }
  return loss;
}

}  // namespace ghrl::nn
