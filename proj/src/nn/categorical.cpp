#include "ghrl/nn/categorical.hpp"

#include <algorithm>
#include <cmath>

#include "ghrl/errors.hpp"

namespace ghrl::nn {

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double mx = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (double& v : out) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : out) v /= sum;
  return out;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double mx = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (double v : out) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  for (double& v : out) v -= lse;
  return out;
}

int sample(std::span<const double> probs, std::mt19937_64& rng) {
  if (probs.empty()) throw ShapeError("sample: empty distribution");
  const double u = uniform01(rng);
  double cum = 0.0;
  int last_nonzero = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    cum += probs[i];
    last_nonzero = static_cast<int>(i);
    if (u < cum) return last_nonzero;
  }
  return last_nonzero;  // rounding left u past the final cumulative sum
}

int argmax(std::span<const double> values) {
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

std::vector<double> floor_renormalize(std::span<const double> probs, double floor) {
  std::vector<double> out(probs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    out[i] = std::max(probs[i], floor);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

double kl(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ShapeError("kl: size mismatch");
  const std::vector<double> pf = floor_renormalize(p);
  const std::vector<double> qf = floor_renormalize(q);
  double d = 0.0;
  for (std::size_t i = 0; i < pf.size(); ++i) d += pf[i] * (std::log(pf[i]) - std::log(qf[i]));
  return std::max(d, 0.0);
}

double log_prob(std::span<const double> probs, int a) {
  if (a < 0 || static_cast<std::size_t>(a) >= probs.size()) throw ShapeError("log_prob: bad index");
  return std::log(floor_renormalize(probs)[static_cast<std::size_t>(a)]);
}

}  // namespace ghrl::nn
