#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>

#include "solarpp/ingest.hpp"
#include "solarpp/site.hpp"

namespace solarpp::synth {

/// A synthetic site with a biased, underdispersed GHI ensemble, clear-sky
/// driven observations, and PV power from a plant that differs from the
/// configured one (tilt, albedo, losses), so both post-processing steps
/// have something to correct.
struct Options {
  std::chrono::sys_days start{std::chrono::year{2019} / 1 / 1};
  std::chrono::sys_days end{std::chrono::year{2021} / 1 / 1};  // exclusive
  std::size_t members = 50;
  std::uint64_t seed = 1;
  PlantSpec site{};
  /// Probability that a PV observation row is absent.
  double missing_fraction = 0.001;
};

/// Sources in their raw stamp conventions: forecasts at hour end, GHI
/// observations mid-hour, PV observations at hour start.
struct RawData {
  EnsembleSeries ghi_forecast;
  ObservationSeries ghi_obs;
  ObservationSeries pv_obs;
};

RawData generate(const Options& options);

/// Haurwitz clear-sky GHI for a cosine of the zenith angle.
double clear_sky_ghi(double cos_zenith);

struct ConfigOverrides {
  bool fast_nn = false;  // small networks and few epochs, for tests
  bool include_nn = true;
  std::uint64_t run_seed = 42;
};

/// Writes ghi_forecast.csv, ghi_obs.csv, pv_obs.csv and config.json into
/// `dir`. The config trains on every full year but the last and tests on
/// the last.
void write_dataset(const std::filesystem::path& dir, const RawData& data, const Options& options,
                   const ConfigOverrides& overrides = {});

}  // namespace solarpp::synth
