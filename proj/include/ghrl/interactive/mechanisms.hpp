#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace ghrl::interactive {

enum class Mechanism {
  kBaseline,
  kFeedbackOnlyReward,
  kRewardShaping,
  kPolicyShapingPrecise,
  kPolicyShapingConstraint,
  kControlSharing,
};

std::string to_string(Mechanism m);
// Throws ConfigError on an unknown name.
Mechanism parse_mechanism(const std::string& name);

// Mechanisms that learn from queried grower inputs.
bool uses_queries(Mechanism m);
// Feedback (+-1) or advice (distribution) queries.
bool wants_feedback(Mechanism m);
bool wants_advice(Mechanism m);

// r' = r + beta * F(s, a)
inline double shape_reward(double reward, double feedback_estimate, double beta) {
  return reward + beta * feedback_estimate;
}

// P = (1 - beta) * agent + beta * normalize(agent * input). Inputs are
// floored first so the product never vanishes.
std::vector<double> shape_policy(std::span<const double> agent, std::span<const double> input,
                                 double beta);

struct SharedAction {
  int action = 0;
  bool overridden = false;
};

// With probability beta the argmax of the feedback estimates replaces the
// agent's sample. The agent's draw always comes from `agent_rng` and the
// override coin from `mech_rng`, so beta = 0 leaves the agent stream intact.
SharedAction share_control(std::span<const double> agent_probs,
                           std::span<const double> feedback_estimates, double beta,
                           std::mt19937_64& agent_rng, std::mt19937_64& mech_rng);

// log[(1 - beta) pi(a) + beta * 1{a = greedy}]
double control_sharing_log_prob(std::span<const double> agent_probs, int greedy, int action,
                                double beta);

enum class BehaviorLogProb { kMixture, kAgent };
std::string to_string(BehaviorLogProb b);
BehaviorLogProb parse_behavior_log_prob(const std::string& name);

// beta(t) = beta0 * max(0, 1 - t / horizon)
class BetaSchedule {
 public:
  BetaSchedule() = default;
  BetaSchedule(double beta0, std::uint64_t horizon);

  double at(std::uint64_t step) const;
  // Estimators are queried, trained and consulted only before the horizon.
  bool active(std::uint64_t step) const { return step < horizon_; }
  double beta0() const { return beta0_; }
  std::uint64_t horizon() const { return horizon_; }

 private:
  double beta0_ = 0.0;
  std::uint64_t horizon_ = 400000;
};

// n distinct indices out of [0, interval), uniformly, returned ascending.
// Throws ConfigError when n > interval.
std::vector<std::size_t> select_random(std::size_t interval, std::size_t n, std::mt19937_64& rng);

// Indices of the n largest predictions (ties -> earlier index), ascending.
std::vector<std::size_t> select_selective(std::span<const double> predicted_discrepancy,
                                          std::size_t n);

// (F(s, a) - f)^2
inline double feedback_discrepancy(double estimate, int provided) {
  const double e = estimate - provided;
  return e * e;
}
// KL(provided || estimate), both floored.
double advice_discrepancy(std::span<const double> estimate, std::span<const double> provided);

}  // namespace ghrl::interactive
