#include "ghrl/climate/pi.hpp"

#include <algorithm>

namespace ghrl::climate {

void PiLoop::reset() {
  errors_.clear();
  integral_ = 0.0;
  saturation_ = Saturation::kNone;
}

void PiLoop::push_error(double error) {
  errors_.push_back(error);
  while (errors_.size() > kWindow) errors_.pop_front();
}

double PiLoop::windowed_integral() const {
  double area = 0.0;
  for (std::size_t i = 1; i < errors_.size(); ++i) {
    area += 0.5 * (errors_[i - 1] + errors_[i]) * kSampleSeconds;
  }
  return area;
}

double PiLoop::output(double kp, double ki, double u_max) {
  const double current = errors_.empty() ? 0.0 : errors_.back();
  double integral = windowed_integral();
  if ((saturation_ == Saturation::kHigh && integral > integral_) ||
      (saturation_ == Saturation::kLow && integral < integral_)) {
    integral = integral_;
  }
  const double raw = kp * current + ki * integral;
  integral_ = integral;
  if (raw > u_max) {
    saturation_ = Saturation::kHigh;
  } else if (raw < 0.0) {
    saturation_ = Saturation::kLow;
  } else {
    saturation_ = Saturation::kNone;
  }
  return std::clamp(raw, 0.0, u_max);
}

double pi_co2(double setpoint_ppm, double measured_ppm, PiLoop& loop, const ModelParams& p,
              const ActuatorLimits& limits) {
  loop.push_error(setpoint_ppm - measured_ppm);
  return loop.output(p(5, 1), p(5, 2), limits.co2_max);
}

double pi_heat(double setpoint_c, double measured_c, PiLoop& loop, const ModelParams& p,
               const ActuatorLimits& limits) {
  loop.push_error(setpoint_c - measured_c);
  return loop.output(p(5, 3), p(5, 4), limits.heat_max);
}

}  // namespace ghrl::climate
