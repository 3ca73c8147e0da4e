#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ghrl/nn/adam.hpp"
#include "ghrl/nn/matrix.hpp"
#include "ghrl/nn/mlp.hpp"

namespace ghrl::ppo {

struct PpoHyper {
  double lr = 1e-4;
  std::size_t n_steps = 2048;
  std::size_t batch = 256;
  double gamma = 0.97;
  double lambda = 0.95;
  double clip = 0.2;
  int epochs = 10;
  double vf_coef = 0.5;
  double ent_coef = 1e-2;
  double max_grad_norm = 0.5;
  bool normalize_advantage = true;
  std::uint64_t total_steps = 500000;
  std::size_t hidden = 512;
  std::size_t depth = 4;
};

// Fixed-capacity trajectory store. done[t] marks that transition t ended its
// episode, so nothing is bootstrapped across it.
class RolloutBuffer {
 public:
  RolloutBuffer() = default;
  RolloutBuffer(std::size_t capacity, std::size_t obs_dim);

  void add(std::span<const double> obs, int action, double behavior_log_prob, double reward,
           double value, bool done);
  void clear();

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  bool full() const { return size_ == capacity_; }

  nn::Matrix obs;
  std::vector<int> actions;
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<std::uint8_t> dones;
  std::vector<double> advantages;
  std::vector<double> returns;

 private:
  std::size_t capacity_ = 0;
  std::size_t size_ = 0;
};

// delta = r + gamma * v_next * (1 - done) - v
inline double td_residual(double reward, double value, double next_value, bool done,
                          double gamma) {
  return reward + gamma * next_value * (done ? 0.0 : 1.0) - value;
}

// Backward GAE recursion; `last_value` bootstraps the state after the final
// stored transition (ignored when that transition is terminal).
void compute_gae(RolloutBuffer& buf, double last_value, double gamma, double lambda);

// Mean/std normalisation in place (population std, eps 1e-8).
void normalize(std::vector<double>& v);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;  // mean pre-clip norm
  int minibatches = 0;
};

// Actor (logits over the action set) and critic, each tanh MLP, trained
// jointly: gradient clipping uses the norm over both parameter sets.
class ActorCritic {
 public:
  ActorCritic() = default;
  ActorCritic(std::size_t obs_dim, std::size_t actions, const PpoHyper& hyper,
              std::mt19937_64& rng);

  std::vector<double> logits(std::span<const double> obs) const { return actor.forward(obs); }
  std::vector<double> policy(std::span<const double> obs) const;
  double value(std::span<const double> obs) const { return critic.forward(obs)[0]; }

  // Epochs of shuffled minibatch updates on a buffer whose advantages are
  // computed. Throws TrainingDivergedError on a non-finite loss or gradient.
  UpdateStats update(const RolloutBuffer& buf, const PpoHyper& hyper, std::mt19937_64& rng);

  nn::Mlp actor;
  nn::Mlp critic;
  nn::Adam actor_opt;
  nn::Adam critic_opt;
};

// Fisher-Yates with an engine-only index draw (portable across stdlibs).
std::vector<std::size_t> permutation(std::size_t n, std::mt19937_64& rng);

}  // namespace ghrl::ppo
