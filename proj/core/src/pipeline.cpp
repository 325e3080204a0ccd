#include "solarpp/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "solarpp/error.hpp"
#include "solarpp/model_chain.hpp"
#include "solarpp/rng.hpp"

#ifndef SOLARPP_VERSION
#define SOLARPP_VERSION "0.0.0"
#endif

namespace solarpp::pipeline {

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

std::string num(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::kFileNotFound, "cannot write " + path.string());
}

void check_same_index(const EnsembleSeries& ens, const ObservationSeries& obs) {
  if (ens.times() != obs.times) {
    throw Error(ErrorCode::kIndexMismatch, "forecast and observation time indices differ");
  }
}

nn::Mode nn_mode(Method m) { return m == Method::kNn ? nn::Mode::kEmbedding : nn::Mode::kHourly; }

EnsembleSeries shift_ensemble(const EnsembleSeries& ens, StampConvention convention) {
  ObservationSeries stamps{ens.variable(), ens.times(), std::vector<double>(ens.size(), 0.0)};
  auto shifted = shift_stamp_to_hour_end(stamps, convention);
  return EnsembleSeries(ens.variable(), std::move(shifted.times), ens.member_count(), ens.member_data(),
                        ens.covariates());
}

std::vector<std::size_t> rows_after(const std::vector<TimePoint>& times, TimePoint start) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] > start) keep.push_back(i);
  }
  return keep;
}

Json report_json(const eval::EvaluationReport& report, std::string_view target, std::string_view strategy,
                 std::string_view method) {
  Json j = Json::parse(report.to_json());
  j["target"] = target;
  j["strategy"] = strategy;
  j["method"] = method;
  return j;
}

void write_report_files(const fs::path& dir, const Json& report_json, const eval::EvaluationReport& report) {
  write_text(dir / "report.json", report_json.dump(2) + "\n");
  write_text(dir / "per_hour.csv", report.per_hour_csv());
  write_text(dir / "histogram.csv", report.histogram_csv());
}

Json train_log_json(const nn::TrainLog& log) {
  Json repeats = Json::array();
  for (const auto& nets : log.repeats) {
    Json arr = Json::array();
    for (const auto& n : nets) {
      arr.push_back({{"hour", n.hour},
                     {"epochs", n.epochs},
                     {"best_epoch", n.best_epoch},
                     {"best_val_crps", n.best_val_crps},
                     {"no_improvement", n.no_improvement},
                     {"train_crps", n.train_crps},
                     {"val_crps", n.val_crps}});
    }
    repeats.push_back(arr);
  }
  return Json{{"repeats", repeats}};
}

}  // namespace

std::string_view version() { return SOLARPP_VERSION; }

std::vector<nn::FeatureRow> build_features(const EnsembleSeries& ens, const ObservationSeries* obs, int utc_offset,
                                           const chain::CovariateNames& names) {
  if (obs) check_same_index(ens, *obs);
  const auto& temperature = ens.covariate(names.temperature);
  const auto& wind = ens.covariate(names.wind);
  std::vector<nn::FeatureRow> rows(ens.size());
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const auto stats = emos::ensemble_stats(ens.members(i));
    rows[i].x = {stats.mean, std::sqrt(stats.variance), temperature[i], wind[i]};
    rows[i].hour = local_hour(ens.times()[i], utc_offset);
    rows[i].y = obs ? obs->values[i] : 0.0;
  }
  return rows;
}

std::vector<emos::Row> build_emos_rows(const EnsembleSeries& ens, const ObservationSeries* obs, int utc_offset) {
  if (obs) check_same_index(ens, *obs);
  std::vector<emos::Row> rows(ens.size());
  for (std::size_t i = 0; i < ens.size(); ++i) {
    rows[i].stats = emos::ensemble_stats(ens.members(i));
    rows[i].y = obs ? obs->values[i] : 0.0;
    rows[i].hour = local_hour(ens.times()[i], utc_offset);
  }
  return rows;
}

Forecaster Forecaster::from_emos(Method method, emos::EmosModel model) {
  Forecaster f;
  f.method_ = method;
  f.emos_ = std::move(model);
  return f;
}

Forecaster Forecaster::from_nn(Method method, nn::AveragedModel model, nn::TrainLog log) {
  Forecaster f;
  f.method_ = method;
  f.nn_ = std::move(model);
  f.log_ = std::move(log);
  return f;
}

eval::DistributionForecasts Forecaster::predict(const EnsembleSeries& ens, int utc_offset,
                                                const chain::CovariateNames& names) const {
  if (!fitted()) throw Error(ErrorCode::kUnfittedModel, "forecaster has not been fitted");
  eval::DistributionForecasts out;
  out.times = ens.times();
  out.forecasts.reserve(ens.size());
  if (is_nn(method_)) {
    const auto rows = build_features(ens, nullptr, utc_offset, names);
    out.forecasts = nn_.predict(rows);
  } else {
    for (const auto& row : build_emos_rows(ens, nullptr, utc_offset)) {
      out.forecasts.push_back(emos_.predict(row.stats, row.hour));
    }
  }
  return out;
}

std::string_view Forecaster::model_extension() const { return is_nn(method_) ? ".bin" : ".json"; }

void Forecaster::save(const fs::path& dir, const std::string& stem) const {
  if (!fitted()) throw Error(ErrorCode::kUnfittedModel, "cannot save an unfitted forecaster");
  fs::create_directories(dir);
  const fs::path path = dir / (stem + std::string(model_extension()));
  if (is_nn(method_)) {
    nn_.save(path.string());
    write_text(dir / (stem + "_training.json"), train_log_json(log_).dump(1) + "\n");
  } else {
    write_text(path, emos_.to_json() + "\n");
  }
}

Forecaster fit_forecaster(Method method, const EnsembleSeries& train_ens, const ObservationSeries& train_obs,
                          const CensoringBounds& bounds, const RunConfig& config, std::uint64_t seed) {
  const int offset = config.site.utc_offset;
  switch (method) {
    case Method::kEmos:
    case Method::kEmosHourly: {
      const auto rows = build_emos_rows(train_ens, &train_obs, offset);
      emos::FitOptions opts;
      opts.seed = seed;
      opts.min_rows = config.emos.min_rows;
      opts.random_restarts = config.emos.random_restarts;
      opts.optimizer = config.emos.optimizer;
      if (method == Method::kEmos) return Forecaster::from_emos(method, emos::fit_global(rows, bounds, opts));
      // Each hour has ~1/24 of the rows, so the per-fit minimum is the per-hour one.
      opts.min_rows = std::min(opts.min_rows, config.emos.min_rows_per_hour);
      return Forecaster::from_emos(method,
                                   emos::fit_hourly(rows, bounds, opts, config.emos.min_rows_per_hour));
    }
    case Method::kNn:
    case Method::kNnHourly: {
      const auto rows = build_features(train_ens, &train_obs, offset, config.data.covariates);
      nn::TrainConfig tc = method == Method::kNn ? config.nn_embedding : config.nn_hourly;
      tc.seed = seed;
      const nn::Head head = train_obs.variable == Variable::kPvPower ? nn::Head::kSoftplus : nn::Head::kReluOffset;
      nn::TrainLog log;
      auto model = nn::train(rows, tc, nn_mode(method), head, bounds, &log);
      return Forecaster::from_nn(method, std::move(model), std::move(log));
    }
    case Method::kNone: break;
  }
  throw Error(ErrorCode::kInvalidStrategy, "no post-processing method to fit");
}

EnsembleSeries ghi_pp_to_ensemble(const eval::DistributionForecasts& forecasts, const EnsembleSeries& like) {
  if (forecasts.times != like.times() || forecasts.forecasts.size() != like.size()) {
    throw Error(ErrorCode::kIndexMismatch, "forecasts and template ensemble differ in time index");
  }
  const std::size_t m = like.member_count();
  std::vector<double> levels(m);
  for (std::size_t i = 0; i < m; ++i) levels[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
  std::vector<double> members;
  members.reserve(like.size() * m);
  for (const auto& d : forecasts.forecasts) {
    for (double p : levels) members.push_back(quantile(d, p));
  }
  return EnsembleSeries(like.variable(), like.times(), m, std::move(members), like.covariates());
}

EnsembleSeries ghi_pp_to_ensemble(const Forecaster& model, const EnsembleSeries& like, int utc_offset,
                                  const chain::CovariateNames& names) {
  return ghi_pp_to_ensemble(model.predict(like, utc_offset, names), like);
}

SplitResult prepare_data(const RunConfig& config) {
  const auto& d = config.data;
  EnsembleSeries forecast = load_ensemble_csv(d.ghi_forecast, d.schema, Variable::kGhi);
  if (d.forecast_convention != StampConvention::kHourEnd) forecast = shift_ensemble(forecast, d.forecast_convention);
  ObservationSeries ghi_obs =
      shift_stamp_to_hour_end(load_observation_csv(d.ghi_obs, Variable::kGhi), d.ghi_obs_convention);
  ObservationSeries pv_obs =
      shift_stamp_to_hour_end(load_observation_csv(d.pv_obs, Variable::kPvPower), d.pv_obs_convention);

  if (config.train_start) {
    const TimePoint start{*config.train_start};
    const auto f = rows_after(forecast.times(), start);
    forecast = forecast.select(f);
    ghi_obs = ghi_obs.select(rows_after(ghi_obs.times, start));
    pv_obs = pv_obs.select(rows_after(pv_obs.times, start));
  }

  Dataset ds{std::move(forecast), std::move(ghi_obs), std::move(pv_obs), config.site};
  return join_and_split(ds, config.train_end, config.test_year);
}

std::string file_fingerprint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open " + path.string());
  std::uint64_t h = 1469598103934665603ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

std::string comparison_csv(std::vector<ComparisonRow> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    if (a.overall.crps != b.overall.crps) return a.overall.crps < b.overall.crps;
    if (a.strategy != b.strategy) return a.strategy < b.strategy;
    return a.method < b.method;
  });
  std::ostringstream out;
  out << "rank,target,strategy,method,n,crps,mae,bias,coverage,width,crps_daytime,coverage_daytime,width_daytime,"
         "skill_pct\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out << i + 1 << ',' << r.target << ',' << r.strategy << ',' << r.method << ',' << r.overall.n << ','
        << num(r.overall.crps) << ',' << num(r.overall.mae) << ',' << num(r.overall.bias) << ','
        << num(r.overall.coverage) << ',' << num(r.overall.width) << ',' << num(r.daytime.crps) << ','
        << num(r.daytime.coverage) << ',' << num(r.daytime.width) << ',' << num(r.skill) << '\n';
  }
  return out.str();
}

struct Pipeline::GhiStage {
  GhiOutcome outcome;
  std::optional<EnsembleSeries> train_ens, test_ens;
  std::optional<EnsembleSeries> pv_train, pv_test;
};

Pipeline::Pipeline(RunConfig config) : config_(std::move(config)) {
  config_.site.validate();
  config_.expand_strategies();
  split_ = prepare_data(config_);
}

Pipeline::~Pipeline() = default;

std::uint64_t Pipeline::seed(const std::string& scope, std::string_view purpose) {
  const std::string tag = scope + "/" + std::string(purpose);
  const std::uint64_t s = derive_seed(config_.seed, tag);
  seeds_[tag] = s;
  return s;
}

const EnsembleSeries& Pipeline::raw_pv(bool train) {
  auto& slot = train ? raw_pv_train_ : raw_pv_test_;
  if (!slot) {
    const auto& ghi = (train ? split_.train : split_.test).ghi_forecast;
    slot = chain::run_chain(ghi, config_.site, config_.data.covariates);
  }
  return *slot;
}

Pipeline::GhiStage& Pipeline::ghi_stage(Method method) {
  auto& slot = ghi_stages_[method];
  if (slot) return *slot;
  auto stage = std::make_unique<GhiStage>();
  const int offset = config_.site.utc_offset;
  const auto& train = split_.train;
  const auto& test = split_.test;
  stage->outcome.method = method;

  if (method == Method::kNone) {
    const std::string scope = "ghi/raw";
    const auto ties = seed(scope, "ties");
    stage->outcome.seeds[scope + "/ties"] = ties;
    stage->outcome.report = eval::score_ensemble_forecasts(test.ghi_forecast, test.ghi_obs, offset, ties);
  } else {
    const std::string scope = "ghi/" + std::string(to_string(method));
    const auto fit_seed = seed(scope, "fit");
    const auto pit_seed = seed(scope, "pit");
    stage->outcome.seeds[scope + "/fit"] = fit_seed;
    stage->outcome.seeds[scope + "/pit"] = pit_seed;
    auto model = std::make_shared<Forecaster>(fit_forecaster(method, train.ghi_forecast, train.ghi_obs,
                                                             CensoringBounds{}, config_, fit_seed));
    const auto test_fc = model->predict(test.ghi_forecast, offset, config_.data.covariates);
    stage->outcome.report = eval::score_distribution_forecasts(
        test_fc, test.ghi_obs, offset, eval::nominal_level(test.ghi_forecast.member_count()), pit_seed);
    stage->test_ens = ghi_pp_to_ensemble(test_fc, test.ghi_forecast);
    stage->train_ens = ghi_pp_to_ensemble(*model, train.ghi_forecast, offset, config_.data.covariates);
    stage->outcome.model = std::move(model);
  }
  slot = std::move(stage);
  return *slot;
}

const GhiOutcome& Pipeline::ghi(Method method) { return ghi_stage(method).outcome; }

const EnsembleSeries& Pipeline::pp_pv(Method method, bool train) {
  if (method == Method::kNone) return raw_pv(train);
  GhiStage& stage = ghi_stage(method);
  auto& slot = train ? stage.pv_train : stage.pv_test;
  if (!slot) slot = chain::run_chain(train ? *stage.train_ens : *stage.test_ens, config_.site, config_.data.covariates);
  return *slot;
}

StrategyOutcome Pipeline::run_strategy(const Strategy& s) {
  s.validate();
  const int offset = config_.site.utc_offset;
  const auto& train = split_.train;
  const auto& test = split_.test;
  const std::string scope = std::string(to_string(s.tag)) + "/" + s.method_label();
  const CensoringBounds pv_bounds{0.0, config_.site.capacity_mw};
  const double nominal = eval::nominal_level(test.ghi_forecast.member_count());

  StrategyOutcome out;
  out.strategy = s;
  const auto take_seed = [&](std::string_view purpose) {
    const auto v = seed(scope, purpose);
    out.seeds[scope + "/" + std::string(purpose)] = v;
    return v;
  };
  const auto fit_and_score = [&](const EnsembleSeries& train_in, const EnsembleSeries& test_in) {
    const auto fit_seed = take_seed("fit");
    const auto pit_seed = take_seed("pit");
    auto model = std::make_shared<Forecaster>(
        fit_forecaster(s.pv_method, train_in, train.pv_obs, pv_bounds, config_, fit_seed));
    const auto fc = model->predict(test_in, offset, config_.data.covariates);
    out.report = eval::score_distribution_forecasts(fc, test.pv_obs, offset, nominal, pit_seed);
    out.model = std::move(model);
  };
  const auto adopt_ghi = [&](Method m) {
    const GhiOutcome& g = ghi(m);
    out.ghi_model = g.model;
    out.seeds.insert(g.seeds.begin(), g.seeds.end());
  };

  switch (s.tag) {
    case StrategyTag::kRawRaw:
      out.report = eval::score_ensemble_forecasts(raw_pv(false), test.pv_obs, offset, take_seed("ties"));
      break;
    case StrategyTag::kPpRaw:
      adopt_ghi(s.ghi_method);
      out.report = eval::score_ensemble_forecasts(pp_pv(s.ghi_method, false), test.pv_obs, offset, take_seed("ties"));
      break;
    case StrategyTag::kRawPp:
      fit_and_score(raw_pv(true), raw_pv(false));
      break;
    case StrategyTag::kPpPp:
      adopt_ghi(s.ghi_method);
      fit_and_score(pp_pv(s.ghi_method, true), pp_pv(s.ghi_method, false));
      break;
    case StrategyTag::kDirect:
      fit_and_score(train.ghi_forecast, test.ghi_forecast);
      break;
  }
  return out;
}

void Pipeline::write_ingest(const fs::path& out) const {
  const fs::path dir = out / "ingest";
  fs::create_directories(dir);
  for (const auto& [name, ds] : {std::pair<std::string, const Dataset*>{"train", &split_.train},
                                 std::pair<std::string, const Dataset*>{"test", &split_.test}}) {
    write_ensemble_csv((dir / (name + "_ghi_forecast.csv")).string(), ds->ghi_forecast, config_.data.schema);
    write_observation_csv((dir / (name + "_ghi_obs.csv")).string(), ds->ghi_obs);
    write_observation_csv((dir / (name + "_pv_obs.csv")).string(), ds->pv_obs);
  }
  const auto span = [](const Dataset& ds) {
    return Json{{"rows", ds.size()},
                {"first", format_time(ds.ghi_forecast.times().front())},
                {"last", format_time(ds.ghi_forecast.times().back())}};
  };
  const Json summary = {
      {"train", span(split_.train)}, {"test", span(split_.test)}, {"dropped_rows", split_.dropped_rows}};
  write_text(dir / "summary.json", summary.dump(2) + "\n");
}

void Pipeline::write_chain(const fs::path& out) {
  const fs::path dir = out / "chain";
  fs::create_directories(dir);
  write_ensemble_csv((dir / "train_pv_ensemble.csv").string(), raw_pv(true), config_.data.schema);
  write_ensemble_csv((dir / "test_pv_ensemble.csv").string(), raw_pv(false), config_.data.schema);
}

void Pipeline::write_ghi(const fs::path& out, const GhiOutcome& g) const {
  const std::string method = g.method == Method::kNone ? "raw" : std::string(to_string(g.method));
  const fs::path dir = out / "ghi" / method;
  write_report_files(dir, report_json(g.report, "ghi", "ghi", method), g.report);
  if (config_.write_models && g.model) g.model->save(dir);
}

void Pipeline::write_strategy(const fs::path& out, const StrategyOutcome& o) const {
  const std::string strategy(to_string(o.strategy.tag));
  const std::string method = o.strategy.method_label();
  const fs::path dir = out / strategy / method;
  write_report_files(dir, report_json(o.report, "pv", strategy, method), o.report);
  if (!config_.write_models) return;
  if (o.model) o.model->save(dir);
  if (o.ghi_model) o.ghi_model->save(dir, o.model ? "ghi_model" : "model");
}

void Pipeline::write_manifest(const fs::path& out, const std::vector<ComparisonRow>& rows) const {
  Json data = Json::object();
  for (const auto& [name, path] : {std::pair<std::string, std::string>{"ghi_forecast", config_.data.ghi_forecast},
                                   {"ghi_obs", config_.data.ghi_obs},
                                   {"pv_obs", config_.data.pv_obs}}) {
    data[name] = {{"path", path}, {"fnv1a64", file_fingerprint(path)}, {"bytes", fs::file_size(path)}};
  }
  Json reports = Json::array();
  for (const auto& r : rows) {
    const std::string dir = r.target == "ghi" ? "ghi/" + r.method : r.strategy + "/" + r.method;
    reports.push_back({{"target", r.target}, {"strategy", r.strategy}, {"method", r.method}, {"dir", dir}});
  }
  const Json manifest = {
      {"version", version()},
      {"master_seed", config_.seed},
      {"seeds", seeds_},
      {"data", data},
      {"rows",
       {{"train", split_.train.size()}, {"test", split_.test.size()}, {"dropped", split_.dropped_rows}}},
      {"reports", reports},
      {"config", Json::parse(to_json(config_))},
  };
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<ComparisonRow> Pipeline::run_all(const fs::path& out) {
  fs::create_directories(out);
  std::vector<ComparisonRow> ghi_rows, pv_rows;

  const GhiOutcome& raw = ghi(Method::kNone);
  write_ghi(out, raw);
  ghi_rows.push_back({"ghi", "ghi", "raw", raw.report.overall, raw.report.daytime, 0.0});
  for (Method m : config_.methods) {
    const GhiOutcome& g = ghi(m);
    write_ghi(out, g);
    ghi_rows.push_back({"ghi", "ghi", std::string(to_string(m)), g.report.overall, g.report.daytime,
                        eval::skill_summary(g.report, raw.report)});
  }

  std::optional<eval::EvaluationReport> reference;
  for (const Strategy& s : config_.expand_strategies()) {
    StrategyOutcome o = run_strategy(s);
    write_strategy(out, o);
    if (s.tag == StrategyTag::kRawRaw) reference = o.report;
    pv_rows.push_back({"pv", std::string(to_string(s.tag)), s.method_label(), o.report.overall, o.report.daytime,
                       0.0});
    if (!reference) reference = run_strategy({StrategyTag::kRawRaw}).report;
    pv_rows.back().skill = eval::skill_summary(o.report, *reference);
  }

  write_text(out / "comparison.csv", comparison_csv(pv_rows));
  write_text(out / "ghi_comparison.csv", comparison_csv(ghi_rows));
  std::vector<ComparisonRow> all = ghi_rows;
  all.insert(all.end(), pv_rows.begin(), pv_rows.end());
  write_manifest(out, all);
  return pv_rows;
}

}  // namespace solarpp::pipeline
