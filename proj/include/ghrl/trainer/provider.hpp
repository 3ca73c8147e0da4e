#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ghrl/env/environment.hpp"
#include "ghrl/oracle/oracle.hpp"

namespace ghrl::trainer {

struct Query {
  std::uint64_t id = 0;       // sequential within a run
  std::uint64_t step = 0;     // global environment step
  std::uint64_t update = 0;   // interval index
  oracle::InputKind kind = oracle::InputKind::kFeedback;
  env::Observation obs;       // raw observation before the action
  env::Hour time = 0;
  env::Action action;         // action taken at that step
  // Environment just before the step; set for feedback queries.
  std::shared_ptr<const env::GreenhouseEnv> env_before;
};

struct Answer {
  std::optional<oracle::GrowerInput> input;  // empty: skipped
  std::string source;                        // human | oracle | estimate | skip | replay
};

// Current estimate of the grower's input for a query (used as a fallback).
using EstimateFn = std::function<oracle::GrowerInput(const Query&)>;

class InputProvider {
 public:
  virtual ~InputProvider() = default;
  // One answer per query, in order.
  virtual std::vector<Answer> answer(const std::vector<Query>& queries, const EstimateFn& estimate) = 0;
};

// The simulated grower: oracle feedback, precise advice or constraint advice.
class SimulatedProvider : public InputProvider {
 public:
  SimulatedProvider(std::shared_ptr<const oracle::OptimalClimateTable> table, bool constraint_advice,
                    oracle::AdviceRanges ranges = {});
  std::vector<Answer> answer(const std::vector<Query>& queries, const EstimateFn& estimate) override;
  oracle::GrowerInput label(const Query& q) const;

 private:
  std::shared_ptr<const oracle::OptimalClimateTable> table_;
  bool constraint_;
  oracle::AdviceRanges ranges_;
};

inline constexpr double kSimplexTolerance = 1e-9;
// Throws DataError unless p is on the probability simplex (sum within 1e-9).
void validate_advice(const oracle::Distribution& p);

nlohmann::json input_to_json(const oracle::GrowerInput& in);
// Throws DataError on a malformed input.
oracle::GrowerInput input_from_json(const nlohmann::json& j);

// Appends every answer given by `inner` to a JSON-lines replay file.
class RecordingProvider : public InputProvider {
 public:
  RecordingProvider(InputProvider& inner, const std::filesystem::path& path);
  std::vector<Answer> answer(const std::vector<Query>& queries, const EstimateFn& estimate) override;

 private:
  InputProvider& inner_;
  std::ofstream out_;
};

// Answers queries from a replay file, matched by global step.
class ReplayProvider : public InputProvider {
 public:
  explicit ReplayProvider(const std::filesystem::path& path);
  std::vector<Answer> answer(const std::vector<Query>& queries, const EstimateFn& estimate) override;

 private:
  std::map<std::uint64_t, Answer> answers_;
};

}  // namespace ghrl::trainer
