#include "solarpp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "solarpp/error.hpp"
#include "solarpp/model_chain.hpp"
#include "solarpp/rng.hpp"

namespace solarpp::synth {

using namespace std::chrono;

double clear_sky_ghi(double cos_zenith) {
  if (cos_zenith <= 0.0) return 0.0;
  return 1098.0 * cos_zenith * std::exp(-0.057 / cos_zenith);
}

RawData generate(const Options& o) {
  if (o.end <= o.start) throw Error(ErrorCode::kInvalidArgument, "empty synthetic period");
  if (o.members < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two members");
  o.site.validate();

  PlantSpec truth = o.site;
  truth.tilt_deg = std::max(0.0, o.site.tilt_deg - 7.0);
  truth.albedo = 0.25;
  truth.gamma_pdc = -0.0037;
  constexpr double kLosses = 0.93;

  Rng rng(o.seed);
  const auto n_hours = static_cast<std::size_t>(duration_cast<hours>(o.end - o.start).count());

  std::vector<TimePoint> times;
  std::vector<double> members;
  std::vector<double> t2m, wind;
  ObservationSeries ghi_obs{Variable::kGhi, {}, {}};
  ObservationSeries pv_obs{Variable::kPvPower, {}, {}};
  times.reserve(n_hours);
  members.reserve(n_hours * o.members);

  double cloud = 0.3;
  double hour_noise = 0.0;
  long day_index = -1;
  for (std::size_t h = 1; h <= n_hours; ++h) {
    const TimePoint t = TimePoint{o.start} + hours{h};
    const long day = static_cast<long>(floor<days>(t + hours{o.site.utc_offset}).time_since_epoch().count());
    if (day != day_index) {
      day_index = day;
      cloud = std::clamp(0.55 * cloud + 0.45 * std::pow(rng.uniform(), 1.6) + 0.05 * rng.normal(), 0.0, 1.0);
    }
    hour_noise = 0.7 * hour_noise + 0.7 * rng.normal();

    const auto sp = chain::solar_position(t - minutes{30}, o.site);
    const double cz = std::cos(sp.zenith * std::numbers::pi / 180.0);
    const double clear = clear_sky_ghi(cz);
    const double k_true = std::clamp(1.0 - 0.75 * cloud + 0.06 * hour_noise * (0.3 + cloud), 0.05, 1.0);
    const double ghi = clear * k_true;

    const double k_center = std::clamp(k_true - 0.04 + 0.13 * rng.normal(), 0.02, 1.05);
    for (std::size_t i = 0; i < o.members; ++i) {
      members.push_back(clear * std::clamp(k_center + 0.04 * rng.normal(), 0.0, 1.1));
    }

    const int lh = local_hour(t, o.site.utc_offset);
    const double doy = static_cast<double>((day % 365 + 365) % 365);
    const double temp_true = 17.0 + 8.0 * std::sin(2.0 * std::numbers::pi * (doy - 110.0) / 365.0) +
                             7.0 * std::sin(2.0 * std::numbers::pi * (lh - 9) / 24.0) + 1.5 * rng.normal();
    const double wind_true = std::max(0.2, 3.0 + 1.5 * rng.normal());
    t2m.push_back(temp_true + rng.normal());
    wind.push_back(std::max(0.0, wind_true + 0.5 * rng.normal()));

    ghi_obs.times.push_back(t - minutes{30});
    ghi_obs.values.push_back(ghi);

    const double noise = 1.0 + 0.03 * rng.normal();
    const double power = kLosses * noise * chain::member_power(ghi, temp_true, wind_true, sp, truth);
    if (rng.uniform() >= o.missing_fraction) {
      pv_obs.times.push_back(t - hours{1});
      pv_obs.values.push_back(std::clamp(power, 0.0, o.site.capacity_mw));
    }
    times.push_back(t);
  }

  RawData out;
  out.ghi_forecast = EnsembleSeries(Variable::kGhi, std::move(times), o.members, std::move(members),
                                    {{"t2m", std::move(t2m)}, {"wind10m", std::move(wind)}});
  out.ghi_obs = std::move(ghi_obs);
  out.pv_obs = std::move(pv_obs);
  return out;
}

void write_dataset(const std::filesystem::path& dir, const RawData& data, const Options& o,
                   const ConfigOverrides& overrides) {
  std::filesystem::create_directories(dir);
  EnsembleSchema schema;
  schema.members = o.members;
  write_ensemble_csv((dir / "ghi_forecast.csv").string(), data.ghi_forecast, schema);
  write_observation_csv((dir / "ghi_obs.csv").string(), data.ghi_obs);
  write_observation_csv((dir / "pv_obs.csv").string(), data.pv_obs);

  const int last_year = static_cast<int>(year_month_day{o.end - days{1}}.year());
  nlohmann::json methods = {"emos", "emos_hourly"};
  if (overrides.include_nn) {
    methods.push_back("nn");
    methods.push_back("nn_hourly");
  }
  nlohmann::json cfg = {
      {"data",
       {{"ghi_forecast", "ghi_forecast.csv"},
        {"ghi_obs", "ghi_obs.csv"},
        {"pv_obs", "pv_obs.csv"},
        {"ghi_obs_convention", "mid-hour"},
        {"pv_obs_convention", "hour-start"},
        {"forecast_convention", "hour-end"},
        {"members", o.members}}},
      {"latitude", o.site.latitude},
      {"longitude", o.site.longitude},
      {"utc_offset", o.site.utc_offset},
      {"capacity_mw", o.site.capacity_mw},
      {"tilt_deg", o.site.tilt_deg},
      {"azimuth_deg", o.site.azimuth_deg},
      {"albedo", o.site.albedo},
      {"train_end", std::to_string(last_year - 1) + "-12-31"},
      {"test_year", last_year},
      {"strategies", {"raw_raw", "pp_raw", "raw_pp", "pp_pp", "direct"}},
      {"methods", methods},
      {"seed", overrides.run_seed},
  };
  if (overrides.fast_nn) {
    const nlohmann::json small = {{"hidden", 16}, {"repeats", 2}, {"max_epochs", 8}, {"patience", 3},
                                  {"patience_night", 2}};
    cfg["nn"] = {{"embedding", small}, {"hourly", small}};
  }
  std::ofstream out(dir / "config.json");
  out << cfg.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kFileNotFound, "cannot write " + (dir / "config.json").string());
}

}  // namespace solarpp::synth
