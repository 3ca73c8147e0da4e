#include "ghrl/climate/model.hpp"

#include <cmath>
#include <string>

#include "ghrl/errors.hpp"

namespace ghrl::climate {

namespace {

void require_finite(double v, const char* term) {
  if (!std::isfinite(v)) {
    throw IntegrationDomainError(std::string("non-finite ") + term);
  }
}

// Canopy light-use curve -p15 T^2 + p16 T - p17.
double temperature_response(double t, const ModelParams& p) {
  return -p(1, 5) * t * t + p(1, 6) * t - p(1, 7);
}

double gross_photosynthesis(double dry_weight, double co2, double temperature, double radiation,
                            const ModelParams& p) {
  const double light = p(1, 4) * radiation;
  const double carboxylation = temperature_response(temperature, p) * (co2 - p(1, 8));
  const double denom = light + carboxylation;
  if (std::abs(denom) < kPhotosynthesisGuard) return 0.0;
  return (1.0 - std::exp(-p(1, 3) * dry_weight)) * light * carboxylation / denom;
}

}  // namespace

Fluxes fluxes(const ModelState& s, const Controls& u, const Exogenous& d, const ModelParams& p) {
  Fluxes f;
  f.photosynthesis = gross_photosynthesis(s.dry_weight, s.co2, s.temperature, d.radiation, p);
  const double vent = u.ventilation * 1e-3 + p(2, 3);
  f.co2_ventilation = vent * (s.co2 - d.co2);
  f.h2o_ventilation = vent * (s.humidity - d.humidity);
  const double saturation = p(4, 3) / (p(4, 4) * (s.temperature + p(4, 5))) *
                            std::exp(p(4, 6) * s.temperature / (s.temperature + p(4, 7)));
  f.transpiration =
      p(4, 2) * (1.0 - std::exp(-p(1, 3) * s.dry_weight)) * (saturation - s.humidity);
  f.respiration_factor = std::exp2(s.temperature / 10.0 - 2.5);
  return f;
}

ModelState derivatives(const ModelState& s, const Controls& u, const Exogenous& d,
                       const ModelParams& p) {
  const Fluxes f = fluxes(s, u, d, p);
  require_finite(f.photosynthesis, "photosynthesis flux");
  require_finite(f.co2_ventilation, "CO2 ventilation flux");
  require_finite(f.h2o_ventilation, "H2O ventilation flux");
  require_finite(f.transpiration, "transpiration flux");
  require_finite(f.respiration_factor, "respiration factor");

  ModelState dx;
  dx.dry_weight = p(1, 1) * f.photosynthesis - p(1, 2) * s.dry_weight * f.respiration_factor;
  dx.co2 = (-f.photosynthesis + p(2, 2) * s.dry_weight * f.respiration_factor +
            u.co2_injection * 1e-6 - f.co2_ventilation) /
           p(2, 1);
  dx.temperature = (u.heating -
                    (p(3, 2) * u.ventilation * 1e-3 + p(3, 3)) * (s.temperature - d.temperature) +
                    p(3, 4) * d.radiation) /
                   p(3, 1);
  dx.humidity = (f.transpiration - f.h2o_ventilation) / p(4, 1);

  require_finite(dx.dry_weight, "dry weight derivative");
  require_finite(dx.co2, "CO2 derivative");
  require_finite(dx.temperature, "temperature derivative");
  require_finite(dx.humidity, "humidity derivative");
  return dx;
}

double growth_rate(double dry_weight, double co2, double temperature, double radiation,
                   const ModelParams& p) {
  return p(1, 1) * gross_photosynthesis(dry_weight, co2, temperature, radiation, p) -
         p(1, 2) * dry_weight * std::exp2(temperature / 10.0 - 2.5);
}

namespace {

ModelState axpy(const ModelState& s, double h, const ModelState& k) {
  return {s.dry_weight + h * k.dry_weight, s.co2 + h * k.co2, s.temperature + h * k.temperature,
          s.humidity + h * k.humidity};
}

}  // namespace

ModelState rk4_step(const ModelState& s, const Controls& u, const Exogenous& d, double dt,
                    const ModelParams& p) {
  if (!(dt > 0.0)) throw UsageError("rk4_step: dt must be positive");
  const ModelState k1 = derivatives(s, u, d, p);
  const ModelState k2 = derivatives(axpy(s, 0.5 * dt, k1), u, d, p);
  const ModelState k3 = derivatives(axpy(s, 0.5 * dt, k2), u, d, p);
  const ModelState k4 = derivatives(axpy(s, dt, k3), u, d, p);
  const double w = dt / 6.0;
  ModelState out{
      s.dry_weight + w * (k1.dry_weight + 2.0 * k2.dry_weight + 2.0 * k3.dry_weight + k4.dry_weight),
      s.co2 + w * (k1.co2 + 2.0 * k2.co2 + 2.0 * k3.co2 + k4.co2),
      s.temperature +
          w * (k1.temperature + 2.0 * k2.temperature + 2.0 * k3.temperature + k4.temperature),
      s.humidity + w * (k1.humidity + 2.0 * k2.humidity + 2.0 * k3.humidity + k4.humidity)};
  check_state(out);
  return out;
}

void check_state(const ModelState& s) {
  if (!std::isfinite(s.dry_weight) || !std::isfinite(s.co2) || !std::isfinite(s.temperature) ||
      !std::isfinite(s.humidity)) {
    throw IntegrationDomainError("non-finite model state");
  }
  if (!(s.dry_weight > 0.0)) throw IntegrationDomainError("dry weight left (0, inf)");
  if (s.co2 < 0.0) throw IntegrationDomainError("indoor CO2 density negative");
  if (s.humidity < 0.0) throw IntegrationDomainError("indoor humidity negative");
  if (s.temperature < -30.0 || s.temperature > 70.0) {
    throw IntegrationDomainError("indoor temperature outside [-30, 70] degC");
  }
}

double co2_ppm_per_density(double temperature, const ModelParams& p) {
  return 1e6 * p(2, 4) * (temperature + p(2, 5)) / (p(2, 6) * p(2, 7));
}

double rh_per_abs_humidity(double temperature, const ModelParams& p) {
  return 1e2 * p(2, 4) * (temperature + p(2, 5)) /
         (11.0 * std::exp(p(4, 8) * temperature / (temperature + p(4, 9))));
}

Measurements measure(const ModelState& s, const ModelParams& p) {
  return {1e3 * s.dry_weight, co2_ppm_per_density(s.temperature, p) * s.co2, s.temperature,
          rh_per_abs_humidity(s.temperature, p) * s.humidity};
}

double rh_to_abs_humidity(double temperature, double rh, const ModelParams& p) {
  if (!(rh >= 0.0 && rh <= 110.0)) {
    throw WeatherDomainError("relative humidity " + std::to_string(rh) + " outside [0, 110] %");
  }
  if (!(temperature >= -30.0 && temperature <= 60.0)) {
    throw WeatherDomainError("temperature " + std::to_string(temperature) +
                             " outside [-30, 60] degC");
  }
  return rh / rh_per_abs_humidity(temperature, p);
}

double ppm_to_density(double temperature, double ppm, const ModelParams& p) {
  if (!(ppm >= 0.0)) throw WeatherDomainError("CO2 concentration must be non-negative");
  return ppm / co2_ppm_per_density(temperature, p);
}

}  // namespace ghrl::climate
