#pragma once

#include <cstddef>
#include <deque>

#include "ghrl/climate/params.hpp"

namespace ghrl::climate {

// Proportional-integral loop over a sliding one-hour error window sampled
// every 15 minutes. The integral is the trapezoidal area under the windowed
// samples (seconds). While the previous output sat on a bound, an integral
// that would push further into that bound is held at its last value
// (conditional integration).
class PiLoop {
 public:
  static constexpr std::size_t kWindow = 4;
  static constexpr double kSampleSeconds = 900.0;

  void reset();

  // Appends the newest error sample (setpoint - measurement).
  void push_error(double error);

  // Trapezoidal area of the current window, in error-units * seconds.
  double windowed_integral() const;

  // Clamped actuator command from the current window. Updates anti-windup state.
  double output(double kp, double ki, double u_max);

  const std::deque<double>& errors() const { return errors_; }
  double last_integral() const { return integral_; }

  friend bool operator==(const PiLoop&, const PiLoop&) = default;

 private:
  enum class Saturation { kNone, kLow, kHigh };

  std::deque<double> errors_;
  double integral_ = 0.0;
  Saturation saturation_ = Saturation::kNone;
};

// CO2 injection (mg/m^2/s) toward a ppm setpoint; pushes the current error first.
double pi_co2(double setpoint_ppm, double measured_ppm, PiLoop& loop, const ModelParams& p,
              const ActuatorLimits& limits);

// Heating (W/m^2) toward a temperature setpoint; pushes the current error first.
double pi_heat(double setpoint_c, double measured_c, PiLoop& loop, const ModelParams& p,
               const ActuatorLimits& limits);

}  // namespace ghrl::climate
