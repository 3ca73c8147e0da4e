#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "ghrl/climate/params.hpp"
#include "ghrl/env/action.hpp"
#include "ghrl/env/environment.hpp"

namespace ghrl::oracle {

using Distribution = std::array<double, env::kNumActions>;

struct Axis {
  double min = 0.0;
  double max = 0.0;
  std::size_t nodes = 2;

  double at(std::size_t i) const;
  friend bool operator==(const Axis&, const Axis&) = default;
};

// Grid over (radiation, dry weight) and the exhaustive search lattice used at
// every node.
struct GridSpec {
  Axis radiation{0.0, 500.0, 21};      // W/m^2
  Axis dry_weight{0.003, 0.4, 21};     // kg/m^2
  double temp_min = 6.0, temp_max = 30.0, temp_step = 0.25;      // degC
  double co2_min = 200.0, co2_max = 1600.0, co2_step = 10.0;     // ppm

  // Throws ConfigError on empty or inverted ranges.
  void validate() const;
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct ClimateTarget {
  double temp = 0.0;  // degC
  double co2 = 0.0;   // ppm
};

// Setpoints maximising instantaneous net growth at one (radiation, dry weight)
// point, searched on the spec's lattice. Ties go to lower temperature, then
// lower CO2.
ClimateTarget best_climate(double radiation, double dry_weight, const GridSpec& spec,
                           const climate::ModelParams& params);

class OptimalClimateTable {
 public:
  OptimalClimateTable() = default;
  OptimalClimateTable(GridSpec spec, std::uint64_t params_hash, std::vector<ClimateTarget> nodes);

  // Bilinear interpolation; queries outside the grid are clamped to its edge.
  ClimateTarget lookup(double radiation, double dry_weight) const;
  const ClimateTarget& node(std::size_t ir, std::size_t iw) const;

  const GridSpec& spec() const { return spec_; }
  std::uint64_t params_hash() const { return params_hash_; }
  const std::vector<ClimateTarget>& nodes() const { return nodes_; }

  void save(const std::filesystem::path& path) const;
  void write(std::ostream& out) const;
  // Throws FormatError on a malformed file or when the stored parameter hash
  // differs from `params`.
  static OptimalClimateTable load(const std::filesystem::path& path,
                                  const climate::ModelParams& params);
  static OptimalClimateTable read(std::istream& in, const climate::ModelParams& params);

  friend bool operator==(const OptimalClimateTable& a, const OptimalClimateTable& b);

 private:
  GridSpec spec_;
  std::uint64_t params_hash_ = 0;
  std::vector<ClimateTarget> nodes_;  // radiation-major
};

// Nodes evaluated in parallel; bit-identical to the serial reference.
OptimalClimateTable build_optimal_table(const climate::ModelParams& params, const GridSpec& spec);

namespace reference {
OptimalClimateTable build_optimal_table(const climate::ModelParams& params, const GridSpec& spec);
}

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct AdviceRanges {
  Range day_co2{400.0, 1500.0};
  Range night_co2{300.0, 600.0};
  Range day_temp{10.0, 25.0};
  Range night_temp{6.0, 10.0};
  double daylight_threshold = 5.0;  // W/m^2 outdoor radiation

  bool is_day(const env::Observation& obs) const;
};

// Resulting setpoints are current + delta before any clamping.
Distribution constraint_advice(const env::Observation& obs, const AdviceRanges& ranges = {});

// |dT| / 2 degC + |dCO2| / 200 ppm
double deviation(double temp, double co2, const ClimateTarget& target);

ClimateTarget target_for(const env::Observation& obs, const OptimalClimateTable& table);

Distribution precise_advice(const env::Observation& obs, const OptimalClimateTable& table);
// Uniform over the actions whose new setpoints are closest to `target`.
Distribution advice_toward(const env::Observation& obs, const ClimateTarget& target);

struct Prediction {
  double temp = 0.0;  // degC
  double co2 = 0.0;   // ppm
};

// Next-hour indoor temperature and CO2 for every action, from clones of `env`.
std::array<Prediction, env::kNumActions> predict_all_actions(const env::GreenhouseEnv& env);

inline constexpr double kFeedbackTolerance = 0.05;

// +1 when the taken action's predicted deviation is within `tol` of the best
// alternative, -1 otherwise.
int binary_feedback(env::Action taken, const ClimateTarget& target,
                    const std::array<Prediction, env::kNumActions>& predictions,
                    double tol = kFeedbackTolerance);

enum class InputKind { kFeedback, kAdvice };

struct GrowerInput {
  InputKind kind = InputKind::kAdvice;
  int feedback = 0;   // +-1, feedback only
  Distribution advice{};
};

}  // namespace ghrl::oracle
