#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <span>
#include <vector>

#include "ghrl/env/environment.hpp"
#include "ghrl/nn/adam.hpp"
#include "ghrl/nn/matrix.hpp"
#include "ghrl/nn/mlp.hpp"
#include "ghrl/oracle/oracle.hpp"

namespace ghrl::interactive {

using NormObs = std::array<double, env::kObsSize>;

struct InputRecord {
  NormObs obs{};
  int action = 0;  // action taken at the queried step
  oracle::GrowerInput input;
  double discrepancy = 0.0;  // against the estimate in use when queried
  std::uint64_t step = 0;
};

// FIFO store of queried inputs.
class InputBuffer {
 public:
  explicit InputBuffer(std::size_t capacity = 50000);

  void add(InputRecord r);
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::size_t capacity() const { return capacity_; }
  const InputRecord& operator[](std::size_t i) const { return records_[i]; }
  const std::deque<InputRecord>& records() const { return records_; }
  void clear() { records_.clear(); }

 private:
  std::size_t capacity_;
  std::deque<InputRecord> records_;
};

struct AuxConfig {
  std::size_t hidden = 256;
  std::size_t depth = 3;
  double feedback_lr = 1e-3;
  double advice_lr = 1e-4;
  double error_lr = 1e-3;
  int iterations = 500;
  std::size_t batch = 64;
  bool full_batch = false;  // every iteration uses the whole buffer
};

// F (per-action feedback estimates), pi_grower (advice logits) and pi_error
// (softplus discrepancy head).
class AuxNets {
 public:
  AuxNets() = default;
  AuxNets(std::size_t obs_dim, const AuxConfig& config, std::mt19937_64& rng);

  // Until the first update these are the warm-start values: F = 0 and
  // uniform advice.
  std::vector<double> feedback_estimates(std::span<const double> obs) const;
  std::vector<double> advice_estimate(std::span<const double> obs) const;
  double predicted_discrepancy(std::span<const double> obs) const;
  std::vector<double> predicted_discrepancy(const nn::Matrix& obs) const;

  // Discrepancy of the current estimate against a provided input.
  double realized_discrepancy(std::span<const double> obs, int action,
                              const oracle::GrowerInput& provided) const;

  nn::Mlp feedback;
  nn::Mlp advice;
  nn::Mlp error;
  nn::Adam feedback_opt;
  nn::Adam advice_opt;
  nn::Adam error_opt;
  bool trained = false;
};

struct AuxLosses {
  // Mean training loss over the iterations (NaN when that net had no data).
  double feedback = 0.0;
  double advice = 0.0;
  double error = 0.0;
  int iterations = 0;
  std::vector<double> feedback_curve;
  std::vector<double> advice_curve;
  std::vector<double> error_curve;
};

// N Adam iterations per net on minibatches drawn with replacement (or the
// full buffer). Feedback records train F, advice records train pi_grower and
// every record trains pi_error. Skips, returning iterations = 0, when empty.
AuxLosses update_aux(AuxNets& nets, const InputBuffer& buffer, const AuxConfig& config,
                     std::mt19937_64& rng);

// Labelled states for tracking estimator quality away from the training data.
struct HeldOutSet {
  std::vector<NormObs> obs;
  std::vector<int> actions;
  std::vector<oracle::GrowerInput> inputs;

  std::size_t size() const { return obs.size(); }
};

// Losses of the current nets on the set, using the same objectives as
// training; pi_error is scored against the current realized discrepancies.
AuxLosses held_out_losses(const AuxNets& nets, const HeldOutSet& set);

}  // namespace ghrl::interactive
