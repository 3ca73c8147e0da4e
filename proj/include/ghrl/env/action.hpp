#pragma once

#include <array>
#include <cstddef>

namespace ghrl::env {

inline constexpr std::size_t kNumActions = 27;
inline constexpr int kHoldAction = 13;

inline constexpr double kTempStep = 2.0;   // degC
inline constexpr double kVentStep = 0.5;   // mm/s
inline constexpr double kCo2Step = 200.0;  // ppm

// Direction of each setpoint change: -1, 0 or +1.
struct ActionDeltas {
  int temp = 0;
  int vent = 0;
  int co2 = 0;

  friend bool operator==(const ActionDeltas&, const ActionDeltas&) = default;
};

// Flat index = 9*iT + 3*iV + iC with i in {0, 1, 2} for (-, 0, +).
struct Action {
  int index = kHoldAction;

  static constexpr Action encode(ActionDeltas d) {
    return Action{9 * (d.temp + 1) + 3 * (d.vent + 1) + (d.co2 + 1)};
  }
  constexpr ActionDeltas decode() const {
    return {index / 9 - 1, (index / 3) % 3 - 1, index % 3 - 1};
  }
  constexpr bool valid() const { return index >= 0 && index < static_cast<int>(kNumActions); }

  double temp_delta() const { return kTempStep * decode().temp; }
  double vent_delta() const { return kVentStep * decode().vent; }
  double co2_delta() const { return kCo2Step * decode().co2; }

  friend bool operator==(const Action&, const Action&) = default;
};

}  // namespace ghrl::env
