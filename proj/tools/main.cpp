// solarpp command line: one subcommand per pipeline stage.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "solarpp/config.hpp"
#include "solarpp/error.hpp"
#include "solarpp/pipeline.hpp"
#include "solarpp/synthetic.hpp"

namespace fs = std::filesystem;
using namespace solarpp;

namespace {

struct Common {
  std::string config_path;
  std::string out;
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config_path, "Run configuration JSON")->required();
  cmd->add_option("--out", common.out, "Run directory (defaults to output_dir in the config)");
}

RunConfig load(const Common& common, fs::path& out) {
  RunConfig cfg = load_run_config(common.config_path);
  if (!common.out.empty()) {
    out = common.out;
  } else if (!cfg.output_dir.empty()) {
    out = cfg.output_dir;
  } else {
    throw Error(ErrorCode::kInvalidConfig, "no output directory: pass --out or set output_dir");
  }
  return cfg;
}

void note(const std::string& msg) { std::cerr << "solarpp: " << msg << '\n'; }

void print_row(const std::string& label, const eval::EvaluationReport& r) {
  std::printf("%-28s crps=%.6g mae=%.6g coverage=%.3g%% (daytime %.3g%%)\n", label.c_str(), r.overall.crps,
              r.overall.mae, r.overall.coverage, r.daytime.coverage);
}

std::vector<Method> pick_methods(const RunConfig& cfg, const std::vector<std::string>& names) {
  if (names.empty()) return cfg.methods;
  std::vector<Method> out;
  for (const auto& n : names) out.push_back(parse_method(n));
  return out;
}

void run_strategies(pipeline::Pipeline& p, const fs::path& out, StrategyTag tag, const std::vector<Method>& methods) {
  for (Method m : methods) {
    Strategy s{tag, Method::kNone, Method::kNone};
    if (tag == StrategyTag::kPpRaw || tag == StrategyTag::kPpPp) s.ghi_method = m;
    if (tag == StrategyTag::kRawPp || tag == StrategyTag::kPpPp || tag == StrategyTag::kDirect) s.pv_method = m;
    if (tag == StrategyTag::kDirect && !is_nn(m)) continue;
    const auto o = p.run_strategy(s);
    p.write_strategy(out, o);
    print_row(std::string(to_string(tag)) + "/" + s.method_label(), o.report);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic solar power forecasting: GHI and PV post-processing pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pipeline::version()));

  Common common;
  auto* ingest = app.add_subcommand("ingest", "Load, align and split the data; write the aligned CSVs");
  add_common(ingest, common);
  auto* chain_cmd = app.add_subcommand("chain", "Run the raw GHI ensemble through the model chain");
  add_common(chain_cmd, common);

  std::vector<std::string> methods;
  auto* fit_ghi = app.add_subcommand("fit-ghi", "Fit and evaluate GHI post-processing models");
  add_common(fit_ghi, common);
  fit_ghi->add_option("--method", methods, "Methods (default: all configured)");
  auto* fit_pv = app.add_subcommand("fit-pv", "Fit PV post-processing on raw chain output (raw_pp)");
  add_common(fit_pv, common);
  fit_pv->add_option("--method", methods, "Methods (default: all configured)");
  auto* fit_direct = app.add_subcommand("fit-direct", "Fit direct GHI-ensemble-to-PV networks");
  add_common(fit_direct, common);
  fit_direct->add_option("--method", methods, "nn and/or nn_hourly (default: configured ones)");

  std::string strategy_name;
  auto* evaluate = app.add_subcommand("evaluate", "Run and evaluate one strategy");
  add_common(evaluate, common);
  evaluate->add_option("--strategy", strategy_name, "raw_raw, pp_raw, raw_pp, pp_pp or direct")->required();
  evaluate->add_option("--method", methods, "Methods (default: all configured)");

  auto* run_all = app.add_subcommand("run-all", "Every GHI and PV report, comparison.csv and manifest.json");
  add_common(run_all, common);

  std::string synth_out;
  std::uint64_t synth_seed = 1;
  std::string synth_start = "2019-01-01";
  std::string synth_end = "2021-01-01";
  bool synth_fast = false;
  bool synth_no_nn = false;
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset and matching config");
  synth->add_option("--out", synth_out, "Directory for the CSVs and config.json")->required();
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--start", synth_start, "First day (YYYY-MM-DD)");
  synth->add_option("--end", synth_end, "Day after the last day (YYYY-MM-DD)");
  synth->add_flag("--fast", synth_fast, "Small networks and few epochs in the written config");
  synth->add_flag("--no-nn", synth_no_nn, "Leave the network methods out of the written config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code(ErrorCategory::kConfig);
  }

  try {
    if (synth->parsed()) {
      synth::Options opts;
      opts.seed = synth_seed;
      opts.start = parse_date(synth_start);
      opts.end = parse_date(synth_end);
      synth::ConfigOverrides ov;
      ov.fast_nn = synth_fast;
      ov.include_nn = !synth_no_nn;
      synth::write_dataset(synth_out, synth::generate(opts), opts, ov);
      note("wrote synthetic dataset to " + synth_out);
      return 0;
    }

    fs::path out;
    RunConfig cfg = load(common, out);
    pipeline::Pipeline p(cfg);
    note("train rows " + std::to_string(p.data().train.size()) + ", test rows " +
         std::to_string(p.data().test.size()) + ", dropped " + std::to_string(p.data().dropped_rows));

    if (ingest->parsed()) {
      p.write_ingest(out);
    } else if (chain_cmd->parsed()) {
      p.write_chain(out);
    } else if (fit_ghi->parsed()) {
      const auto& raw = p.ghi(Method::kNone);
      p.write_ghi(out, raw);
      print_row("ghi/raw", raw.report);
      for (Method m : pick_methods(p.config(), methods)) {
        if (m == Method::kNone) continue;
        const auto& g = p.ghi(m);
        p.write_ghi(out, g);
        print_row("ghi/" + std::string(to_string(m)), g.report);
      }
    } else if (fit_pv->parsed()) {
      run_strategies(p, out, StrategyTag::kRawPp, pick_methods(p.config(), methods));
    } else if (fit_direct->parsed()) {
      auto chosen = pick_methods(p.config(), methods);
      std::erase_if(chosen, [](Method m) { return !is_nn(m); });
      if (chosen.empty()) throw Error(ErrorCode::kInvalidStrategy, "direct needs nn or nn_hourly");
      run_strategies(p, out, StrategyTag::kDirect, chosen);
    } else if (evaluate->parsed()) {
      const StrategyTag tag = parse_strategy(strategy_name);
      if (tag == StrategyTag::kRawRaw) {
        run_strategies(p, out, tag, {Method::kNone});
      } else {
        run_strategies(p, out, tag, pick_methods(p.config(), methods));
      }
    } else if (run_all->parsed()) {
      const auto rows = p.run_all(out);
      std::cout << pipeline::comparison_csv(rows);
    }
    return 0;
  } catch (const Error& e) {
    note(std::string(to_string(e.code())) + ": " + e.what());
    return exit_code(e.category());
  } catch (const std::exception& e) {
    note(std::string("internal error: ") + e.what());
    return 1;
  }
}
