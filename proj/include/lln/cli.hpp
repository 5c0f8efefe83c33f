// Command-line front end: config loading, subcommand dispatch, output files.
//
// Exit codes: 0 all verdicts pass, 2 some verdict failed, 1 usage or config
// error. Outputs and a manifest are written on 0 and 2.
#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lln/config.hpp"
#include "lln/experiments.hpp"
#include "lln/report.hpp"

namespace lln {

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"simulate",       "gamma",      "lln",  "l2", "multirange",
                                              "counterexample", "identities", "shift"};
  return names;
}

template <class Group>
ExperimentReport dispatch_typed(const std::string& sub, const StepDistribution<Group>& dist,
                                const ExperimentConfig& cfg, unsigned threads) {
  if (sub == "simulate") return run_simulate(dist, cfg, threads);
  if (sub == "gamma") return run_gamma(dist, cfg, threads);
  if (sub == "lln") return run_lln(dist, cfg, threads);
  if (sub == "l2") return run_l2(dist, cfg, threads);
  if (sub == "multirange") return run_multirange(dist, cfg, threads);
  if (sub == "counterexample") return run_counterexample(dist, cfg, threads);
  if (sub == "identities") return run_identity_suite(dist, cfg, threads);
  if (sub == "shift") return run_shift_invariance(dist, cfg, threads);
  throw config_error("unknown subcommand '" + sub + "'");
}

inline ExperimentReport dispatch(const std::string& sub, const ExperimentConfig& cfg, unsigned threads) {
  return std::visit(
      [&](const auto& g) { return dispatch_typed(sub, make_distribution(g, cfg.step_weights), cfg, threads); },
      cfg.group);
}

/// Writes <out>/<sub>.csv, <out>/<sub>.json and <out>/manifest.json.
inline std::vector<std::string> write_outputs(const std::filesystem::path& out_dir, const std::string& sub,
                                              const ExperimentReport& rep, const ExperimentConfig& cfg) {
  std::filesystem::create_directories(out_dir);
  auto csv = out_dir / (sub + ".csv");
  auto json = out_dir / (sub + ".json");
  write_file(csv, to_csv(rep));
  write_file(json, to_summary_text(rep, cfg));
  return {csv.string(), json.string()};
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Monte Carlo laws of large numbers for local-time functionals of random walks on groups"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = "lln_out";
  std::optional<std::uint64_t> seed;
  app.option_defaults()->always_capture_default();
  app.add_option("--config", config_path, "config file (key = value)")->check(CLI::ExistingFile);
  app.add_option("--set", overrides, "override, key=value (repeatable)")->allow_extra_args(false);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "master seed (overrides config)");
  for (const auto& s : subcommands()) app.add_subcommand(s)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    // Name the first bare word that is not a subcommand; CLI11 only reports it as missing.
    std::string what = e.what();
    for (int i = 1; i < argc; ++i) {
      std::string a = argv[i];
      if (a == "--config" || a == "--set" || a == "--out" || a == "--seed") {
        ++i;
        continue;
      }
      if (!a.empty() && a[0] != '-' &&
          std::find(subcommands().begin(), subcommands().end(), a) == subcommands().end()) {
        what = "unknown subcommand '" + a + "'";
        break;
      }
    }
    err << "error: " << what << "\n\n" << app.help();
    return 1;
  }
  const std::string sub = app.get_subcommands().front()->get_name();

  const auto started = std::chrono::system_clock::now();
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg;
  ExperimentReport rep;
  const unsigned threads = thread_count();
  try {
    if (seed) overrides.push_back("seed=" + std::to_string(*seed));
    cfg = config_path.empty() ? parse_config_text("", overrides) : parse_config(config_path, overrides);
    rep = dispatch(sub, cfg, threads);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  const int code = rep.passed() ? 0 : 2;

  RunManifest m;
  m.subcommand = sub;
  m.config = cfg;
  m.gamma = rep.summary.contains("gamma") ? rep.summary["gamma"] : Json(nullptr);
  m.started = started;
  m.threads = threads;
  m.exit_code = code;
  try {
    m.outputs = write_outputs(out_dir, sub, rep, cfg);
    auto manifest = std::filesystem::path(out_dir) / "manifest.json";
    m.outputs.push_back(manifest.string());
    m.finished = std::chrono::system_clock::now();
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_file(manifest, m.to_json().dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  for (const auto& [name, ok] : rep.verdicts) out << (ok ? "PASS " : "FAIL ") << name << "\n";
  out << sub << ": " << (code == 0 ? "ok" : "verdict failure") << " (outputs in " << out_dir << ")\n";
  return code;
}

}  // namespace lln
