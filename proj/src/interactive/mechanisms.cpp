#include "ghrl/interactive/mechanisms.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "ghrl/errors.hpp"
#include "ghrl/nn/categorical.hpp"

namespace ghrl::interactive {

namespace {
constexpr std::array<std::pair<Mechanism, const char*>, 6> kNames{{
    {Mechanism::kBaseline, "baseline"},
    {Mechanism::kFeedbackOnlyReward, "feedback_only_reward"},
    {Mechanism::kRewardShaping, "reward_shaping"},
    {Mechanism::kPolicyShapingPrecise, "policy_shaping_precise"},
    {Mechanism::kPolicyShapingConstraint, "policy_shaping_constraint"},
    {Mechanism::kControlSharing, "control_sharing"},
}};
}  // namespace

std::string to_string(Mechanism m) {
  for (const auto& [k, name] : kNames) {
    if (k == m) return name;
  }
  return "?";
}

Mechanism parse_mechanism(const std::string& name) {
  for (const auto& [k, n] : kNames) {
    if (name == n) return k;
  }
  throw ConfigError("unknown mechanism '" + name + "'");
}

bool uses_queries(Mechanism m) { return wants_feedback(m) || wants_advice(m); }

bool wants_feedback(Mechanism m) {
  return m == Mechanism::kRewardShaping || m == Mechanism::kControlSharing;
}

bool wants_advice(Mechanism m) {
  return m == Mechanism::kPolicyShapingPrecise || m == Mechanism::kPolicyShapingConstraint;
}

std::vector<double> shape_policy(std::span<const double> agent, std::span<const double> input,
                                 double beta) {
  if (agent.size() != input.size()) throw ShapeError("shape_policy: size mismatch");
  if (beta < 0.0 || beta > 1.0) throw UsageError("shape_policy: beta outside [0, 1]");
  const std::vector<double> a = nn::floor_renormalize(agent);
  const std::vector<double> b = nn::floor_renormalize(input);
  std::vector<double> product(agent.size());
  double z = 0.0;
  for (std::size_t i = 0; i < product.size(); ++i) {
    product[i] = a[i] * b[i];
    z += product[i];
  }
  std::vector<double> out(agent.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (1.0 - beta) * agent[i] + beta * (product[i] / z);
  }
  return out;
}

SharedAction share_control(std::span<const double> agent_probs,
                           std::span<const double> feedback_estimates, double beta,
                           std::mt19937_64& agent_rng, std::mt19937_64& mech_rng) {
  if (agent_probs.size() != feedback_estimates.size()) throw ShapeError("share_control: size mismatch");
  const int sampled = nn::sample(agent_probs, agent_rng);
  const bool override = nn::uniform01(mech_rng) < beta;
  if (!override) return {sampled, false};
  return {nn::argmax(feedback_estimates), true};
}

double control_sharing_log_prob(std::span<const double> agent_probs, int greedy, int action,
                                double beta) {
  const double p = agent_probs[static_cast<std::size_t>(action)];
  const double mix = (1.0 - beta) * p + (action == greedy ? beta : 0.0);
  return std::log(std::max(mix, nn::kProbFloor));
}

std::string to_string(BehaviorLogProb b) { return b == BehaviorLogProb::kMixture ? "mixture" : "agent"; }

BehaviorLogProb parse_behavior_log_prob(const std::string& name) {
  if (name == "mixture") return BehaviorLogProb::kMixture;
  if (name == "agent") return BehaviorLogProb::kAgent;
  throw ConfigError("behavior_logprob must be 'mixture' or 'agent', got '" + name + "'");
}

BetaSchedule::BetaSchedule(double beta0, std::uint64_t horizon) : beta0_(beta0), horizon_(horizon) {
  if (!(beta0 >= 0.0 && beta0 <= 1.0)) throw ConfigError("beta0 must lie in [0, 1]");
  if (horizon == 0) throw ConfigError("beta decay horizon must be positive");
}

double BetaSchedule::at(std::uint64_t step) const {
  if (step >= horizon_) return 0.0;
  return beta0_ * (1.0 - static_cast<double>(step) / static_cast<double>(horizon_));
}

std::vector<std::size_t> select_random(std::size_t interval, std::size_t n, std::mt19937_64& rng) {
  if (n > interval) {
    throw ConfigError("cannot select " + std::to_string(n) + " inputs from an interval of " +
                      std::to_string(interval) + " steps");
  }
  std::vector<std::size_t> idx(interval);
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates: the first n slots become the sample.
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t left = interval - i;
    const auto j = i + std::min(static_cast<std::size_t>(nn::uniform01(rng) * static_cast<double>(left)), left - 1);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<std::size_t> select_selective(std::span<const double> predicted, std::size_t n) {
  if (n > predicted.size()) {
    throw ConfigError("cannot select " + std::to_string(n) + " inputs from an interval of " +
                      std::to_string(predicted.size()) + " steps");
  }
  std::vector<std::size_t> idx(predicted.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return predicted[a] > predicted[b]; });
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double advice_discrepancy(std::span<const double> estimate, std::span<const double> provided) {
  return nn::kl(provided, estimate);
}

}  // namespace ghrl::interactive
