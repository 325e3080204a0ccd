#include "solarpp/model_chain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "solarpp/error.hpp"

namespace solarpp {

void PlantSpec::validate() const {
  if (!(tilt_deg >= 0.0 && tilt_deg <= 90.0)) throw Error(ErrorCode::kInvalidConfig, "tilt must be in [0, 90]");
  if (!(albedo >= 0.0 && albedo <= 1.0)) throw Error(ErrorCode::kInvalidConfig, "albedo must be in [0, 1]");
  if (!(capacity_mw > 0.0)) throw Error(ErrorCode::kInvalidConfig, "capacity must be positive");
  if (!(gamma_pdc < 0.0)) throw Error(ErrorCode::kInvalidConfig, "gamma_pdc must be negative");
  if (!(latitude >= -90.0 && latitude <= 90.0)) throw Error(ErrorCode::kInvalidConfig, "latitude out of range");
  if (!(longitude >= -180.0 && longitude <= 180.0)) throw Error(ErrorCode::kInvalidConfig, "longitude out of range");
  if (!(azimuth_deg >= 0.0 && azimuth_deg < 360.0)) throw Error(ErrorCode::kInvalidConfig, "azimuth must be in [0, 360)");
  if (utc_offset < -12 || utc_offset > 14) throw Error(ErrorCode::kInvalidConfig, "utc_offset out of range");
}

namespace chain {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
const double kCos87 = std::cos(87.0 * kDeg);

double wrap360(double x) {
  x = std::fmod(x, 360.0);
  return x < 0.0 ? x + 360.0 : x;
}

}  // namespace

SolarPosition solar_position(TimePoint t, const PlantSpec& plant) {
  const double jd = julian_day(t);
  const double T = (jd - 2451545.0) / 36525.0;

  const double mean_long = wrap360(280.46646 + T * (36000.76983 + 0.0003032 * T));
  const double mean_anom = 357.52911 + T * (35999.05029 - 0.0001537 * T);
  const double ecc = 0.016708634 - T * (0.000042037 + 0.0000001267 * T);
  const double m = mean_anom * kDeg;
  const double center = std::sin(m) * (1.914602 - T * (0.004817 + 0.000014 * T)) +
                        std::sin(2.0 * m) * (0.019993 - 0.000101 * T) + std::sin(3.0 * m) * 0.000289;
  const double true_long = mean_long + center;
  const double true_anom = (mean_anom + center) * kDeg;
  const double radius = 1.000001018 * (1.0 - ecc * ecc) / (1.0 + ecc * std::cos(true_anom));

  const double omega = (125.04 - 1934.136 * T) * kDeg;
  const double app_long = (true_long - 0.00569 - 0.00478 * std::sin(omega)) * kDeg;
  const double obliq_mean = 23.0 + (26.0 + (21.448 - T * (46.815 + T * (0.00059 - T * 0.001813))) / 60.0) / 60.0;
  const double obliq = (obliq_mean + 0.00256 * std::cos(omega)) * kDeg;
  const double decl = std::asin(std::sin(obliq) * std::sin(app_long));

  const double y = std::pow(std::tan(obliq / 2.0), 2);
  const double l0 = mean_long * kDeg;
  const double eot_min = 4.0 / kDeg *
                         (y * std::sin(2.0 * l0) - 2.0 * ecc * std::sin(m) +
                          4.0 * ecc * y * std::sin(m) * std::cos(2.0 * l0) - 0.5 * y * y * std::sin(4.0 * l0) -
                          1.25 * ecc * ecc * std::sin(2.0 * m));

  const auto secs = t.time_since_epoch().count();
  const double minutes_utc = static_cast<double>(((secs % 86400) + 86400) % 86400) / 60.0;
  const double true_solar_min = minutes_utc + eot_min + 4.0 * plant.longitude;
  const double hour_angle = (true_solar_min / 4.0 - 180.0) * kDeg;

  const double lat = plant.latitude * kDeg;
  const double cos_zen = std::clamp(
      std::sin(lat) * std::sin(decl) + std::cos(lat) * std::cos(decl) * std::cos(hour_angle), -1.0, 1.0);
  const double zenith = std::acos(cos_zen) / kDeg;
  const double azimuth =
      wrap360(std::atan2(std::sin(hour_angle), std::cos(hour_angle) * std::sin(lat) - std::tan(decl) * std::cos(lat)) /
                  kDeg +
              180.0);

  const double etr = kSolarConstant / (radius * radius);
  return {zenith, azimuth, etr, etr * std::max(cos_zen, 0.0)};
}

double erbs_diffuse_fraction(double kt) {
  if (kt <= 0.22) return 1.0 - 0.09 * kt;
  if (kt <= 0.80) {
    return 0.9511 - 0.1604 * kt + 4.388 * kt * kt - 16.638 * kt * kt * kt + 12.336 * kt * kt * kt * kt;
  }
  return 0.165;
}

Separation erbs_separation(double ghi, double zenith_deg, double extraterrestrial) {
  if (!(ghi > 0.0)) return {0.0, 0.0};
  const double cos_zen = std::cos(zenith_deg * kDeg);
  if (cos_zen <= 0.0 || extraterrestrial <= 0.0) return {0.0, ghi};

  const double kt = ghi / std::max(extraterrestrial, 1e-6);
  const double dhi = erbs_diffuse_fraction(kt) * ghi;
  const double cos_div = std::max(cos_zen, kCos87);
  const double beam_cap = extraterrestrial / cos_div;
  const double dni = std::clamp((ghi - dhi) / cos_div, 0.0, beam_cap);
  return {dni, std::max(ghi - dni * cos_div, 0.0)};
}

double cos_incidence(const SolarPosition& sp, const PlantSpec& plant) {
  const double zen = sp.zenith * kDeg;
  const double tilt = plant.tilt_deg * kDeg;
  return std::cos(zen) * std::cos(tilt) +
         std::sin(zen) * std::sin(tilt) * std::cos((sp.azimuth - plant.azimuth_deg) * kDeg);
}

double poa_transposition(const IrradianceComponents& c, const SolarPosition& sp, const PlantSpec& plant) {
  const double tilt = plant.tilt_deg * kDeg;
  const double cos_aoi = std::max(cos_incidence(sp, plant), 0.0);
  const double beam = c.dni * cos_aoi;

  double sky = 0.0;
  if (c.dhi > 0.0) {
    const double cos_zen = std::cos(sp.zenith * kDeg);
    const double horizontal_beam = std::max(c.dni * cos_zen, 0.0);
    const double anisotropy =
        sp.extraterrestrial_dni > 0.0 ? std::clamp(c.dni / sp.extraterrestrial_dni, 0.0, 1.0) : 0.0;
    const double rb = cos_zen > 0.0 ? cos_aoi / std::max(cos_zen, kCos87) : 0.0;
    const double horizon = c.ghi > 0.0 ? std::sqrt(horizontal_beam / c.ghi) * std::pow(std::sin(tilt / 2.0), 3) : 0.0;
    sky = c.dhi * (anisotropy * rb + (1.0 - anisotropy) * 0.5 * (1.0 + std::cos(tilt)) * (1.0 + horizon));
  }
  const double ground = c.ghi * plant.albedo * 0.5 * (1.0 - std::cos(tilt));
  return std::max(beam + sky + ground, 0.0);
}

double cell_temperature(double poa, double temp_air, double wind, const TemperatureModelParams& params) {
  const double module = poa * std::exp(params.a + params.b * wind) + temp_air;
  return module + poa / 1000.0 * params.delta_t;
}

double pv_power(double poa, double t_cell, const PlantSpec& plant) {
  const double p = plant.capacity_mw * (poa / 1000.0) * (1.0 + plant.gamma_pdc * (t_cell - 25.0));
  return std::clamp(p, 0.0, plant.capacity_mw);
}

double member_power(double ghi, double temp_air, double wind, const SolarPosition& sp, const PlantSpec& plant) {
  if (!(ghi > 0.0)) return 0.0;
  const Separation sep = erbs_separation(ghi, sp.zenith, sp.extraterrestrial_ghi);
  const IrradianceComponents comps{ghi, sep.dni, sep.dhi, 0.0};
  const double poa = poa_transposition(comps, sp, plant);
  const double t_cell = cell_temperature(poa, temp_air, wind, plant.temp_model);
  return pv_power(poa, t_cell, plant);
}

EnsembleSeries run_chain(const EnsembleSeries& ghi, const PlantSpec& plant, const CovariateNames& names) {
  const auto& temperature = ghi.covariate(names.temperature);
  const auto& wind = ghi.covariate(names.wind);
  const std::size_t m = ghi.member_count();

  std::vector<double> power(ghi.size() * m);
  for (std::size_t i = 0; i < ghi.size(); ++i) {
    const SolarPosition sp = solar_position(ghi.times()[i] - std::chrono::minutes{30}, plant);
    const auto members = ghi.members(i);
    for (std::size_t k = 0; k < m; ++k) {
      power[i * m + k] = member_power(members[k], temperature[i], wind[i], sp, plant);
    }
  }
  return EnsembleSeries(Variable::kPvPower, ghi.times(), m, std::move(power), ghi.covariates());
}

}  // namespace chain
}  // namespace solarpp
