// CSV, JSON summary and run manifest writers.
//
// The CSV and summary are pure functions of config and seed: numbers use the
// shortest representation that round-trips, and nothing time-dependent goes
// into them. Timings and timestamps live only in the manifest.
#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"
#include "lln/config.hpp"
#include "lln/experiments.hpp"

namespace lln {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kArtifactVersion = "0.1.0";

/// Shortest round-trip decimal; NaN becomes an empty field.
inline std::string format_number(double x) {
  if (std::isnan(x)) return {};
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline const char* kCsvHeader = "checkpoint_n,replica_count,statistic,mean,variance,ci_halfwidth,theory_target,abs_gap";

inline std::string to_csv(const ExperimentReport& rep) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& r : rep.rows) {
    out += std::to_string(r.checkpoint_n) + ',' + std::to_string(r.replica_count) + ',' +
           detail::csv_field(r.statistic) + ',' + format_number(r.mean) + ',' + format_number(r.variance) + ',' +
           format_number(r.ci_halfwidth) + ',' + format_number(r.theory_target) + ',' + format_number(r.abs_gap) +
           '\n';
  }
  return out;
}

inline Json config_to_json(const ExperimentConfig& c) {
  Json j;
  if (auto* f = std::get_if<FreeGroup>(&c.group))
    j["group"] = {{"kind", "free"}, {"rank", f->rank}};
  else
    j["group"] = {{"kind", "lattice"}, {"dim", std::get<Lattice>(c.group).dim}};
  Json w = Json::array();
  for (const auto& [lit, wt] : c.step_weights) w.push_back({lit, wt});
  j["step_weights"] = w;
  j["checkpoints"] = c.checkpoints;
  j["replicas"] = c.replicas;
  j["seed"] = c.seed;
  j["functionals"] = c.functionals;
  j["gamma"] = c.gamma_policy;
  j["gamma_replicas"] = c.effective_gamma_replicas();
  j["k_max"] = c.k_max;
  j["j_max"] = c.j_max;
  j["p_list"] = c.p_list;
  j["control"] = c.control;
  j["window"] = c.window;
  j["offsets"] = c.offsets;
  j["splits"] = c.splits;
  j["a_horizon"] = c.a_horizon;
  j["a_replicas"] = c.a_replicas;
  j["tolerance"] = c.tolerance;
  return j;
}

inline Json summary_json(const ExperimentReport& rep, const ExperimentConfig& cfg) {
  Json j;
  j["schema_version"] = kReportSchemaVersion;
  j["experiment"] = rep.experiment;
  j["config"] = config_to_json(cfg);
  Json v = Json::object();
  for (const auto& [k, ok] : rep.verdicts) v[k] = ok;
  j["verdicts"] = v;
  j["passed"] = rep.passed();
  for (const auto& [k, val] : rep.summary.items()) j[k] = val;
  return j;
}

inline std::string to_summary_text(const ExperimentReport& rep, const ExperimentConfig& cfg) {
  return summary_json(rep, cfg).dump(2) + "\n";
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline std::string iso_utc(std::chrono::system_clock::time_point t) {
  std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunManifest {
  std::string subcommand;
  ExperimentConfig config;
  Json gamma = nullptr;
  std::vector<std::string> outputs;
  std::chrono::system_clock::time_point started;
  std::chrono::system_clock::time_point finished;
  double wall_seconds = 0.0;
  unsigned threads = 1;
  int exit_code = 0;

  Json to_json() const {
    Json j;
    j["schema_version"] = kReportSchemaVersion;
    j["artifact_version"] = kArtifactVersion;
    j["subcommand"] = subcommand;
    j["config"] = config_to_json(config);
    j["config_text"] = to_config_text(config);
    j["gamma"] = gamma;
    j["seed_record"] = {{"master_seed", config.seed},
                        {"replicas", config.replicas},
                        {"generator", "philox4x64-10"},
                        {"stream_key", "(master_seed, replica_index)"},
                        {"lanes", {{"walk", 0}, {"splits", 1}, {"auxiliary", 2}}}};
    j["outputs"] = outputs;
    j["started_at"] = iso_utc(started);
    j["finished_at"] = iso_utc(finished);
    j["wall_seconds"] = wall_seconds;
    j["threads"] = threads;
    j["exit_code"] = exit_code;
    return j;
  }
};

}  // namespace lln
