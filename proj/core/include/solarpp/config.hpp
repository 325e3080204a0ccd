#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "solarpp/ingest.hpp"
#include "solarpp/model_chain.hpp"
#include "solarpp/nn.hpp"
#include "solarpp/optimize.hpp"
#include "solarpp/site.hpp"

namespace solarpp {

enum class StrategyTag { kRawRaw, kPpRaw, kRawPp, kPpPp, kDirect };
enum class Method { kNone, kEmos, kEmosHourly, kNn, kNnHourly };

std::string_view to_string(StrategyTag tag);
std::string_view to_string(Method method);
StrategyTag parse_strategy(std::string_view text);  // throws Error(kInvalidStrategy)
Method parse_method(std::string_view text);         // throws Error(kInvalidStrategy)
bool is_nn(Method method);

/// Which stage(s) receive post-processing, and with which method.
struct Strategy {
  StrategyTag tag = StrategyTag::kRawRaw;
  Method ghi_method = Method::kNone;
  Method pv_method = Method::kNone;

  /// Throws Error(kInvalidStrategy) when the methods do not fit the tag.
  void validate() const;
  /// Method label used in output paths ("none" for raw_raw).
  std::string method_label() const;
};

struct DataPaths {
  std::string ghi_forecast;
  std::string ghi_obs;
  std::string pv_obs;
  StampConvention ghi_obs_convention = StampConvention::kMidHour;
  StampConvention pv_obs_convention = StampConvention::kHourStart;
  StampConvention forecast_convention = StampConvention::kHourEnd;
  EnsembleSchema schema{};
  chain::CovariateNames covariates{};
};

struct EmosSettings {
  optim::Options optimizer{};
  int random_restarts = 1;
  std::size_t min_rows = 100;
  std::size_t min_rows_per_hour = 30;
};

struct RunConfig {
  DataPaths data;
  PlantSpec site;
  /// Rows before this date are dropped (e.g. before plant commissioning).
  std::optional<std::chrono::sys_days> train_start;
  std::chrono::sys_days train_end{};
  int test_year = 2020;
  std::vector<StrategyTag> strategies{StrategyTag::kRawRaw, StrategyTag::kPpRaw, StrategyTag::kRawPp,
                                      StrategyTag::kPpPp, StrategyTag::kDirect};
  std::vector<Method> methods{Method::kEmos, Method::kEmosHourly, Method::kNn, Method::kNnHourly};
  EmosSettings emos{};
  nn::TrainConfig nn_embedding = nn::TrainConfig::defaults(nn::Mode::kEmbedding);
  nn::TrainConfig nn_hourly = nn::TrainConfig::defaults(nn::Mode::kHourly);
  std::uint64_t seed = 0;
  std::string output_dir;
  bool write_models = true;

  /// Every (strategy, method) combination implied by `strategies` x `methods`.
  std::vector<Strategy> expand_strategies() const;
};

/// Parses RunConfig JSON. Relative data paths resolve against `base_dir`.
/// Throws Error(kInvalidConfig) for malformed input, including data files
/// that do not exist.
RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::string& path);

std::string to_json(const RunConfig& config);

}  // namespace solarpp
