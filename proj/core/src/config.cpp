#include "solarpp/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "solarpp/error.hpp"

namespace solarpp {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::pair<StrategyTag, std::string_view> kStrategyNames[] = {
    {StrategyTag::kRawRaw, "raw_raw"}, {StrategyTag::kPpRaw, "pp_raw"}, {StrategyTag::kRawPp, "raw_pp"},
    {StrategyTag::kPpPp, "pp_pp"},     {StrategyTag::kDirect, "direct"},
};

constexpr std::pair<Method, std::string_view> kMethodNames[] = {
    {Method::kNone, "none"}, {Method::kEmos, "emos"},           {Method::kEmosHourly, "emos_hourly"},
    {Method::kNn, "nn"},     {Method::kNnHourly, "nn_hourly"},
};

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::kInvalidConfig, msg); }

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      config_error("unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
T get(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) config_error("missing key '" + std::string(key) + "' in " + where);
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    config_error("key '" + std::string(key) + "' in " + where + " has the wrong type");
  }
}

template <typename T>
void get_optional(const json& obj, const char* key, const std::string& where, T& out) {
  if (obj.contains(key)) out = get<T>(obj, key, where);
}

std::chrono::sys_days get_date(const json& obj, const char* key, const std::string& where) {
  const auto text = get<std::string>(obj, key, where);
  try {
    return parse_date(text);
  } catch (const Error&) {
    config_error("key '" + std::string(key) + "' is not a YYYY-MM-DD date: " + text);
  }
}

std::string resolve(const std::string& path, const fs::path& base) {
  fs::path p(path);
  if (p.is_relative()) p = base / p;
  if (!fs::exists(p)) config_error("referenced file does not exist: " + p.string());
  return p.lexically_normal().string();
}

std::string_view convention_name(StampConvention c) {
  switch (c) {
    case StampConvention::kHourEnd: return "hour-end";
    case StampConvention::kMidHour: return "mid-hour";
    case StampConvention::kHourStart: return "hour-start";
  }
  return "hour-end";
}

StampConvention get_convention(const json& obj, const char* key, StampConvention fallback) {
  if (!obj.contains(key)) return fallback;
  return parse_convention(get<std::string>(obj, key, "data"));
}

void parse_site(const json& obj, PlantSpec& site, const std::string& where) {
  get_optional(obj, "latitude", where, site.latitude);
  get_optional(obj, "longitude", where, site.longitude);
  get_optional(obj, "utc_offset", where, site.utc_offset);
  get_optional(obj, "capacity_mw", where, site.capacity_mw);
  // Tilt follows latitude unless given.
  site.tilt_deg = site.latitude;
  get_optional(obj, "tilt_deg", where, site.tilt_deg);
  get_optional(obj, "azimuth_deg", where, site.azimuth_deg);
  get_optional(obj, "albedo", where, site.albedo);
  get_optional(obj, "gamma_pdc", where, site.gamma_pdc);
  if (obj.contains("temperature_model")) {
    const auto& t = obj.at("temperature_model");
    if (!t.is_object()) config_error("temperature_model must be an object");
    reject_unknown_keys(t, {"a", "b", "delta_t"}, "temperature_model");
    get_optional(t, "a", "temperature_model", site.temp_model.a);
    get_optional(t, "b", "temperature_model", site.temp_model.b);
    get_optional(t, "delta_t", "temperature_model", site.temp_model.delta_t);
  }
}

void parse_train_config(const json& obj, nn::TrainConfig& cfg, const std::string& where) {
  if (!obj.is_object()) config_error(where + " must be an object");
  reject_unknown_keys(obj,
                      {"learning_rate", "batch_size", "patience", "patience_night", "max_epochs",
                       "validation_fraction", "repeats", "hidden"},
                      where);
  get_optional(obj, "learning_rate", where, cfg.learning_rate);
  get_optional(obj, "batch_size", where, cfg.batch_size);
  get_optional(obj, "patience", where, cfg.patience);
  get_optional(obj, "patience_night", where, cfg.patience_night);
  get_optional(obj, "max_epochs", where, cfg.max_epochs);
  get_optional(obj, "validation_fraction", where, cfg.validation_fraction);
  get_optional(obj, "repeats", where, cfg.repeats);
  get_optional(obj, "hidden", where, cfg.hidden);
  if (!(cfg.learning_rate > 0.0)) config_error(where + ".learning_rate must be positive");
  if (cfg.batch_size == 0) config_error(where + ".batch_size must be positive");
  if (cfg.patience < 1 || cfg.patience_night < 1) config_error(where + ".patience must be at least 1");
  if (cfg.max_epochs < 1) config_error(where + ".max_epochs must be at least 1");
  if (!(cfg.validation_fraction > 0.0 && cfg.validation_fraction < 1.0)) {
    config_error(where + ".validation_fraction must be in (0, 1)");
  }
  if (cfg.repeats < 1) config_error(where + ".repeats must be at least 1");
  if (cfg.hidden < 1) config_error(where + ".hidden must be at least 1");
}

json train_config_json(const nn::TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size}, {"patience", c.patience},
          {"patience_night", c.patience_night}, {"max_epochs", c.max_epochs},
          {"validation_fraction", c.validation_fraction}, {"repeats", c.repeats}, {"hidden", c.hidden}};
}

}  // namespace

std::string_view to_string(StrategyTag tag) {
  for (const auto& [t, name] : kStrategyNames) {
    if (t == tag) return name;
  }
  return "unknown";
}

std::string_view to_string(Method method) {
  for (const auto& [m, name] : kMethodNames) {
    if (m == method) return name;
  }
  return "unknown";
}

StrategyTag parse_strategy(std::string_view text) {
  for (const auto& [t, name] : kStrategyNames) {
    if (name == text) return t;
  }
  throw Error(ErrorCode::kInvalidStrategy, "unknown strategy '" + std::string(text) + "'");
}

Method parse_method(std::string_view text) {
  for (const auto& [m, name] : kMethodNames) {
    if (name == text) return m;
  }
  throw Error(ErrorCode::kInvalidStrategy, "unknown method '" + std::string(text) + "'");
}

bool is_nn(Method method) { return method == Method::kNn || method == Method::kNnHourly; }

void Strategy::validate() const {
  const auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::kInvalidStrategy, std::string(to_string(tag)) + ": " + why);
  };
  const bool ghi = ghi_method != Method::kNone;
  const bool pv = pv_method != Method::kNone;
  switch (tag) {
    case StrategyTag::kRawRaw:
      if (ghi || pv) fail("takes no post-processing method");
      break;
    case StrategyTag::kPpRaw:
      if (!ghi || pv) fail("requires a GHI method only");
      break;
    case StrategyTag::kRawPp:
      if (ghi || !pv) fail("requires a PV method only");
      break;
    case StrategyTag::kPpPp:
      if (!ghi || !pv) fail("requires both a GHI and a PV method");
      if (ghi_method != pv_method) fail("GHI and PV methods must match");
      break;
    case StrategyTag::kDirect:
      if (ghi || !is_nn(pv_method)) fail("requires pv_method nn or nn_hourly");
      break;
  }
}

std::string Strategy::method_label() const {
  if (pv_method != Method::kNone) return std::string(to_string(pv_method));
  return std::string(to_string(ghi_method));
}

std::vector<Strategy> RunConfig::expand_strategies() const {
  std::vector<Strategy> out;
  std::set<StrategyTag> seen;
  for (auto tag : strategies) {
    if (!seen.insert(tag).second) continue;
    if (tag == StrategyTag::kRawRaw) {
      out.push_back({tag, Method::kNone, Method::kNone});
      continue;
    }
    for (auto m : methods) {
      switch (tag) {
        case StrategyTag::kPpRaw: out.push_back({tag, m, Method::kNone}); break;
        case StrategyTag::kRawPp: out.push_back({tag, Method::kNone, m}); break;
        case StrategyTag::kPpPp: out.push_back({tag, m, m}); break;
        case StrategyTag::kDirect:
          if (is_nn(m)) out.push_back({tag, Method::kNone, m});
          break;
        case StrategyTag::kRawRaw: break;
      }
    }
  }
  for (const auto& s : out) s.validate();
  return out;
}

RunConfig parse_run_config(std::string_view json_text, const fs::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    config_error(std::string("malformed JSON: ") + e.what());
  }
  if (!root.is_object()) config_error("top level must be an object");
  reject_unknown_keys(root,
                      {"data", "site", "latitude", "longitude", "utc_offset", "capacity_mw", "tilt_deg",
                       "azimuth_deg", "albedo", "gamma_pdc", "temperature_model", "train_start", "train_end",
                       "test_year", "strategies", "methods", "emos", "nn", "seed", "output_dir", "write_models"},
                      "config");

  RunConfig cfg;

  if (root.contains("site")) {
    if (!root.at("site").is_object()) config_error("site must be an object");
    reject_unknown_keys(root.at("site"),
                        {"latitude", "longitude", "utc_offset", "capacity_mw", "tilt_deg", "azimuth_deg", "albedo",
                         "gamma_pdc", "temperature_model"},
                        "site");
    parse_site(root.at("site"), cfg.site, "site");
  } else {
    parse_site(root, cfg.site, "config");
  }
  try {
    cfg.site.validate();
  } catch (const Error& e) {
    config_error(e.what());
  }

  if (!root.contains("data") || !root.at("data").is_object()) config_error("missing object 'data'");
  const auto& data = root.at("data");
  reject_unknown_keys(data,
                      {"ghi_forecast", "ghi_obs", "pv_obs", "ghi_obs_convention", "pv_obs_convention",
                       "forecast_convention", "time_column", "member_prefix", "members", "temperature_column",
                       "wind_column"},
                      "data");
  cfg.data.ghi_forecast = resolve(get<std::string>(data, "ghi_forecast", "data"), base_dir);
  cfg.data.ghi_obs = resolve(get<std::string>(data, "ghi_obs", "data"), base_dir);
  cfg.data.pv_obs = resolve(get<std::string>(data, "pv_obs", "data"), base_dir);
  try {
    cfg.data.ghi_obs_convention = get_convention(data, "ghi_obs_convention", StampConvention::kMidHour);
    cfg.data.pv_obs_convention = get_convention(data, "pv_obs_convention", StampConvention::kHourStart);
    cfg.data.forecast_convention = get_convention(data, "forecast_convention", StampConvention::kHourEnd);
  } catch (const Error& e) {
    config_error(e.what());
  }
  get_optional(data, "time_column", "data", cfg.data.schema.time_column);
  get_optional(data, "member_prefix", "data", cfg.data.schema.member_prefix);
  get_optional(data, "members", "data", cfg.data.schema.members);
  if (cfg.data.schema.members < 2) config_error("data.members must be at least 2");
  get_optional(data, "temperature_column", "data", cfg.data.covariates.temperature);
  get_optional(data, "wind_column", "data", cfg.data.covariates.wind);
  cfg.data.schema.covariates = {cfg.data.covariates.temperature, cfg.data.covariates.wind};

  if (root.contains("train_start")) cfg.train_start = get_date(root, "train_start", "config");
  cfg.train_end = get_date(root, "train_end", "config");
  cfg.test_year = get<int>(root, "test_year", "config");
  const std::chrono::sys_days test_start{std::chrono::year{cfg.test_year} / 1 / 1};
  if (cfg.train_end >= test_start) config_error("train_end must precede the test year");
  if (cfg.train_start && *cfg.train_start > cfg.train_end) config_error("train_start is after train_end");

  if (root.contains("strategies")) {
    const auto names = get<std::vector<std::string>>(root, "strategies", "config");
    if (names.empty()) config_error("strategies must not be empty");
    cfg.strategies.clear();
    for (const auto& n : names) cfg.strategies.push_back(parse_strategy(n));
  }
  if (root.contains("methods")) {
    const auto names = get<std::vector<std::string>>(root, "methods", "config");
    cfg.methods.clear();
    for (const auto& n : names) {
      const Method m = parse_method(n);
      if (m == Method::kNone) config_error("'none' is implied by raw_raw and is not a method");
      if (std::find(cfg.methods.begin(), cfg.methods.end(), m) == cfg.methods.end()) cfg.methods.push_back(m);
    }
  }
  const bool needs_method = std::any_of(cfg.strategies.begin(), cfg.strategies.end(),
                                        [](StrategyTag t) { return t != StrategyTag::kRawRaw; });
  if (needs_method && cfg.methods.empty()) config_error("post-processing strategies need at least one method");

  if (root.contains("emos")) {
    const auto& e = root.at("emos");
    if (!e.is_object()) config_error("emos must be an object");
    reject_unknown_keys(e, {"max_iterations", "rel_tol", "grad_tol", "random_restarts", "min_rows",
                            "min_rows_per_hour"},
                        "emos");
    get_optional(e, "max_iterations", "emos", cfg.emos.optimizer.max_iterations);
    get_optional(e, "rel_tol", "emos", cfg.emos.optimizer.rel_tol);
    get_optional(e, "grad_tol", "emos", cfg.emos.optimizer.grad_tol);
    get_optional(e, "random_restarts", "emos", cfg.emos.random_restarts);
    get_optional(e, "min_rows", "emos", cfg.emos.min_rows);
    get_optional(e, "min_rows_per_hour", "emos", cfg.emos.min_rows_per_hour);
    if (cfg.emos.optimizer.max_iterations < 1) config_error("emos.max_iterations must be at least 1");
    if (cfg.emos.random_restarts < 0) config_error("emos.random_restarts must be non-negative");
  }

  if (root.contains("nn")) {
    const auto& n = root.at("nn");
    if (!n.is_object()) config_error("nn must be an object");
    reject_unknown_keys(n, {"embedding", "hourly"}, "nn");
    if (n.contains("embedding")) parse_train_config(n.at("embedding"), cfg.nn_embedding, "nn.embedding");
    if (n.contains("hourly")) parse_train_config(n.at("hourly"), cfg.nn_hourly, "nn.hourly");
  }

  get_optional(root, "seed", "config", cfg.seed);
  get_optional(root, "output_dir", "config", cfg.output_dir);
  get_optional(root, "write_models", "config", cfg.write_models);

  cfg.expand_strategies();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kInvalidConfig, "cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), fs::path(path).parent_path());
}

std::string to_json(const RunConfig& c) {
  json strategies = json::array();
  for (auto t : c.strategies) strategies.push_back(std::string(to_string(t)));
  json methods = json::array();
  for (auto m : c.methods) methods.push_back(std::string(to_string(m)));
  json j = {
      {"data",
       {{"ghi_forecast", c.data.ghi_forecast},
        {"ghi_obs", c.data.ghi_obs},
        {"pv_obs", c.data.pv_obs},
        {"ghi_obs_convention", convention_name(c.data.ghi_obs_convention)},
        {"pv_obs_convention", convention_name(c.data.pv_obs_convention)},
        {"forecast_convention", convention_name(c.data.forecast_convention)},
        {"time_column", c.data.schema.time_column},
        {"member_prefix", c.data.schema.member_prefix},
        {"members", c.data.schema.members},
        {"temperature_column", c.data.covariates.temperature},
        {"wind_column", c.data.covariates.wind}}},
      {"site",
       {{"latitude", c.site.latitude},
        {"longitude", c.site.longitude},
        {"utc_offset", c.site.utc_offset},
        {"capacity_mw", c.site.capacity_mw},
        {"tilt_deg", c.site.tilt_deg},
        {"azimuth_deg", c.site.azimuth_deg},
        {"albedo", c.site.albedo},
        {"gamma_pdc", c.site.gamma_pdc},
        {"temperature_model",
         {{"a", c.site.temp_model.a}, {"b", c.site.temp_model.b}, {"delta_t", c.site.temp_model.delta_t}}}}},
      {"train_end", format_date(c.train_end)},
      {"test_year", c.test_year},
      {"strategies", strategies},
      {"methods", methods},
      {"emos",
       {{"max_iterations", c.emos.optimizer.max_iterations},
        {"rel_tol", c.emos.optimizer.rel_tol},
        {"grad_tol", c.emos.optimizer.grad_tol},
        {"random_restarts", c.emos.random_restarts},
        {"min_rows", c.emos.min_rows},
        {"min_rows_per_hour", c.emos.min_rows_per_hour}}},
      {"nn", {{"embedding", train_config_json(c.nn_embedding)}, {"hourly", train_config_json(c.nn_hourly)}}},
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"write_models", c.write_models},
  };
  if (c.train_start) j["train_start"] = format_date(*c.train_start);
  return j.dump(2);
}

}  // namespace solarpp
