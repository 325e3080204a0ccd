#pragma once

#include <string>

#include "solarpp/ingest.hpp"
#include "solarpp/site.hpp"
#include "solarpp/time.hpp"

namespace solarpp::chain {

inline constexpr double kSolarConstant = 1361.1;  // W m^-2

struct SolarPosition {
  double zenith;                    // degrees, geometric
  double azimuth;                   // degrees clockwise from north
  double extraterrestrial_dni;      // W m^-2 at the current Earth-Sun distance
  double extraterrestrial_ghi;      // extraterrestrial_dni * max(cos zenith, 0)
};

struct IrradianceComponents {
  double ghi = 0.0;
  double dni = 0.0;
  double dhi = 0.0;
  double poa_global = 0.0;
};

/// NOAA/Meeus low-order solar ephemeris (arcminute-level accuracy).
SolarPosition solar_position(TimePoint t, const PlantSpec& plant);

struct Separation {
  double dni;
  double dhi;
};

/// Erbs diffuse-fraction separation. `extraterrestrial` is horizontal
/// extraterrestrial irradiance. The cosine in the DNI division is clamped
/// at cos(87 deg) and DNI is capped at the extraterrestrial beam.
Separation erbs_separation(double ghi, double zenith_deg, double extraterrestrial);

/// Erbs diffuse fraction for a clearness index.
double erbs_diffuse_fraction(double kt);

/// Cosine of the angle of incidence on the tilted plane.
double cos_incidence(const SolarPosition& sp, const PlantSpec& plant);

/// Plane-of-array irradiance: beam + Reindl sky diffuse + ground reflected.
double poa_transposition(const IrradianceComponents& c, const SolarPosition& sp, const PlantSpec& plant);

/// Sandia (King 2004) cell temperature in deg C.
double cell_temperature(double poa, double temp_air, double wind, const TemperatureModelParams& params = {});

/// PVWatts-style linear temperature-coefficient model, clamped to [0, capacity], MW.
double pv_power(double poa, double t_cell, const PlantSpec& plant);

/// All five steps for one member at a fixed solar position.
double member_power(double ghi, double temp_air, double wind, const SolarPosition& sp, const PlantSpec& plant);

struct CovariateNames {
  std::string temperature = "t2m";
  std::string wind = "wind10m";
};

/// Applies the chain to every member of a GHI ensemble. Stamps stay at
/// hour end; solar geometry is evaluated at the mid-interval instant.
/// Throws Error(kMissingCovariate).
EnsembleSeries run_chain(const EnsembleSeries& ghi, const PlantSpec& plant, const CovariateNames& names = {});

}  // namespace solarpp::chain
