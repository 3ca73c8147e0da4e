#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace ghrl::climate {

// Coefficients p(i, j) of the lettuce greenhouse model, 1-based as in the
// original parameter table. Groups: 1 crop, 2 CO2, 3 heat, 4 humidity, 5 PI gains.
class ModelParams {
 public:
  static constexpr int kGroups = 5;
  static constexpr std::array<int, kGroups> kGroupSizes = {8, 7, 4, 9, 4};

  // Table defaults.
  ModelParams();

  double operator()(int i, int j) const { return values_.at(i - 1).at(j - 1); }
  double& operator()(int i, int j) { return values_.at(i - 1).at(j - 1); }

  static bool defined(int i, int j) {
    return i >= 1 && i <= kGroups && j >= 1 && j <= kGroupSizes[i - 1];
  }

  // One `p_{i,j} = value` line per parameter, 17 significant digits.
  std::string dump() const;
  static ModelParams parse(const std::string& text);

  // FNV-1a over dump(); used to tie persisted artifacts to a parameter set.
  std::uint64_t hash() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  std::array<std::array<double, 9>, kGroups> values_{};
};

// Actuator saturation limits.
struct ActuatorLimits {
  double co2_max = 1.2;    // mg/m^2/s
  double vent_max = 7.5;   // mm/s
  double heat_max = 150.0; // W/m^2
};

}  // namespace ghrl::climate
