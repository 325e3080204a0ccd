#pragma once

namespace solarpp {

/// Sandia open-rack module temperature coefficients.
struct TemperatureModelParams {
  double a = -3.56;
  double b = -0.075;
  double delta_t = 3.0;
};

/// Plant location, geometry and performance constants. Angles in degrees,
/// azimuth measured clockwise from north (south = 180).
struct PlantSpec {
  double latitude = 32.62;
  double longitude = -116.13;
  int utc_offset = -8;
  double capacity_mw = 20.0;
  double tilt_deg = 32.62;
  double azimuth_deg = 180.0;
  double albedo = 0.2;
  double gamma_pdc = -0.004;
  TemperatureModelParams temp_model{};

  /// Throws Error(kInvalidConfig) when an invariant is violated.
  void validate() const;
};

}  // namespace solarpp
