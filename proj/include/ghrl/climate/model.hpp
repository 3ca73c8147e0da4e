#pragma once

#include "ghrl/climate/params.hpp"

namespace ghrl::climate {

// Crop and indoor-air state.
struct ModelState {
  double dry_weight = 0.0;    // kg/m^2
  double co2 = 0.0;           // kg/m^3
  double temperature = 0.0;   // degC
  double humidity = 0.0;      // kg/m^3 (absolute)

  friend bool operator==(const ModelState&, const ModelState&) = default;
};

// Outdoor weather driving the model.
struct Exogenous {
  double radiation = 0.0;     // W/m^2
  double co2 = 0.0;           // kg/m^3
  double temperature = 0.0;   // degC
  double humidity = 0.0;      // kg/m^3
};

struct Controls {
  double co2_injection = 0.0; // mg/m^2/s
  double ventilation = 0.0;   // mm/s
  double heating = 0.0;       // W/m^2
};

struct Measurements {
  double dry_weight = 0.0;    // g/m^2
  double co2 = 0.0;           // ppm
  double temperature = 0.0;   // degC
  double humidity = 0.0;      // % relative
};

// Intermediate fluxes of the right-hand side, exposed for tests and diagnostics.
struct Fluxes {
  double photosynthesis = 0.0;  // gross canopy photosynthesis
  double co2_ventilation = 0.0;
  double h2o_ventilation = 0.0;
  double transpiration = 0.0;
  double respiration_factor = 0.0;  // 2^(x3/10 - 5/2)
};

// Denominator magnitude below which gross photosynthesis is taken as zero.
inline constexpr double kPhotosynthesisGuard = 1e-12;

Fluxes fluxes(const ModelState& s, const Controls& u, const Exogenous& d, const ModelParams& p);

// Time derivatives of the four states (units per second). Throws
// IntegrationDomainError naming the first non-finite term.
ModelState derivatives(const ModelState& s, const Controls& u, const Exogenous& d,
                       const ModelParams& p);

// Net crop growth rate dx1/dt; only depends on dry weight, CO2, temperature and radiation.
double growth_rate(double dry_weight, double co2, double temperature, double radiation,
                   const ModelParams& p);

// One classical RK4 step of `dt` seconds with u and d held constant.
ModelState rk4_step(const ModelState& s, const Controls& u, const Exogenous& d, double dt,
                    const ModelParams& p);

// Throws IntegrationDomainError when the state is non-finite or outside its sanity bounds.
void check_state(const ModelState& s);

Measurements measure(const ModelState& s, const ModelParams& p);

// Conversion factor c such that y2 [ppm] = c * x2 [kg/m^3].
double co2_ppm_per_density(double temperature, const ModelParams& p);
// Conversion factor c such that y4 [%] = c * x4 [kg/m^3].
double rh_per_abs_humidity(double temperature, const ModelParams& p);

// Inverse of the relative humidity measurement. rh in [0, 110], T in [-30, 60].
double rh_to_abs_humidity(double temperature, double rh, const ModelParams& p = ModelParams{});
// Inverse of the CO2 measurement; c >= 0.
double ppm_to_density(double temperature, double ppm, const ModelParams& p = ModelParams{});

}  // namespace ghrl::climate
