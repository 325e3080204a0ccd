#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "solarpp/config.hpp"
#include "solarpp/emos.hpp"
#include "solarpp/evaluation.hpp"
#include "solarpp/ingest.hpp"
#include "solarpp/nn.hpp"

namespace solarpp::pipeline {

std::string_view version();

/// NN inputs for every row: ensemble mean, ensemble sd, temperature, wind,
/// local hour. `obs` supplies targets when non-null (same time index).
std::vector<nn::FeatureRow> build_features(const EnsembleSeries& ens, const ObservationSeries* obs, int utc_offset,
                                           const chain::CovariateNames& names = {});

std::vector<emos::Row> build_emos_rows(const EnsembleSeries& ens, const ObservationSeries* obs, int utc_offset);

/// A fitted post-processing model of either family.
class Forecaster {
 public:
  Forecaster() = default;
  static Forecaster from_emos(Method method, emos::EmosModel model);
  static Forecaster from_nn(Method method, nn::AveragedModel model, nn::TrainLog log = {});

  Method method() const { return method_; }
  bool fitted() const { return method_ != Method::kNone; }

  /// One censored normal per ensemble row. Throws Error(kUnfittedModel).
  eval::DistributionForecasts predict(const EnsembleSeries& ens, int utc_offset,
                                      const chain::CovariateNames& names = {}) const;

  /// ".json" for EMOS, ".bin" for networks.
  std::string_view model_extension() const;
  /// Writes `<stem>.json` or `<stem>.bin` (plus `<stem>_training.json`
  /// for networks) into `dir`.
  void save(const std::filesystem::path& dir, const std::string& stem = "model") const;

  const emos::EmosModel& emos_model() const { return emos_; }
  const nn::AveragedModel& nn_model() const { return nn_; }
  const nn::TrainLog& train_log() const { return log_; }

 private:
  Method method_ = Method::kNone;
  emos::EmosModel emos_;
  nn::AveragedModel nn_;
  nn::TrainLog log_;
};

/// Fits `method` mapping `train_ens` to `train_obs` (same time index).
/// Networks use the softplus head for PV targets and ReLU + 1e-3 for GHI.
Forecaster fit_forecaster(Method method, const EnsembleSeries& train_ens, const ObservationSeries& train_obs,
                          const CensoringBounds& bounds, const RunConfig& config, std::uint64_t seed);

/// Equidistant quantiles at (i - 0.5) / m of each forecast, with times and
/// covariates taken from `like`; m is like.member_count().
EnsembleSeries ghi_pp_to_ensemble(const eval::DistributionForecasts& forecasts, const EnsembleSeries& like);
/// Predicts with `model`, then converts. Throws Error(kUnfittedModel).
EnsembleSeries ghi_pp_to_ensemble(const Forecaster& model, const EnsembleSeries& like, int utc_offset,
                                  const chain::CovariateNames& names = {});

/// Loads the three sources, moves stamps to hour end, applies train_start,
/// joins and splits.
SplitResult prepare_data(const RunConfig& config);

/// FNV-1a 64 of a file's bytes as 16 hex digits.
std::string file_fingerprint(const std::filesystem::path& path);

/// Outcome of one strategy: the PV report and the PV-stage model, if any.
struct StrategyOutcome {
  Strategy strategy;
  eval::EvaluationReport report;
  std::shared_ptr<const Forecaster> model;      // PV stage or direct model
  std::shared_ptr<const Forecaster> ghi_model;  // GHI stage, if any
  std::map<std::string, std::uint64_t> seeds;
};

/// Outcome of GHI post-processing with one method (or raw when kNone).
struct GhiOutcome {
  Method method = Method::kNone;
  eval::EvaluationReport report;
  std::shared_ptr<const Forecaster> model;
  std::map<std::string, std::uint64_t> seeds;
};

struct ComparisonRow {
  std::string target;
  std::string strategy;
  std::string method;
  eval::Aggregate overall;
  eval::Aggregate daytime;
  double skill = 0.0;  // percent CRPS improvement over the raw reference
};

/// Sorted by CRPS, ties broken by strategy then method name.
std::string comparison_csv(std::vector<ComparisonRow> rows);

/// Runs strategies against one loaded dataset, caching shared stages (the
/// raw chain and each GHI model) across strategies.
class Pipeline {
 public:
  explicit Pipeline(RunConfig config);
  ~Pipeline();
  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  const RunConfig& config() const { return config_; }
  const SplitResult& data() const { return split_; }

  /// Seed for "<scope>/<purpose>" derived from the master seed; every seed
  /// handed out is recorded for the manifest.
  std::uint64_t seed(const std::string& scope, std::string_view purpose);
  const std::map<std::string, std::uint64_t>& seeds() const { return seeds_; }

  /// Model chain applied to the raw train / test GHI ensembles.
  const EnsembleSeries& raw_pv(bool train);

  const GhiOutcome& ghi(Method method);
  /// Chain output of the post-processed GHI ensemble for `method`.
  const EnsembleSeries& pp_pv(Method method, bool train);

  StrategyOutcome run_strategy(const Strategy& strategy);

  /// Every GHI report, every PV report, comparison.csv and manifest.json.
  std::vector<ComparisonRow> run_all(const std::filesystem::path& out);

  /// Writes the split inputs (aligned CSVs) and a summary.
  void write_ingest(const std::filesystem::path& out) const;
  /// Writes the raw chain PV ensembles.
  void write_chain(const std::filesystem::path& out);
  void write_ghi(const std::filesystem::path& out, const GhiOutcome& outcome) const;
  void write_strategy(const std::filesystem::path& out, const StrategyOutcome& outcome) const;
  void write_manifest(const std::filesystem::path& out, const std::vector<ComparisonRow>& rows) const;

 private:
  struct GhiStage;
  GhiStage& ghi_stage(Method method);

  RunConfig config_;
  SplitResult split_;
  std::map<std::string, std::uint64_t> seeds_;
  std::optional<EnsembleSeries> raw_pv_train_, raw_pv_test_;
  std::map<Method, std::unique_ptr<GhiStage>> ghi_stages_;
};

}  // namespace solarpp::pipeline
