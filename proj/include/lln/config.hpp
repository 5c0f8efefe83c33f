// Experiment configuration: a flat `key = value` text format with one
// optional `[step_weights]` section.
//
//   # comment
//   group = "free"          # or "lattice"
//   rank = 2                # free group rank k >= 2
//   dim = 3                 # lattice dimension d >= 1
//   steps = 100000          # largest n; defaults the checkpoint list
//   checkpoints = 1000, 10000, 100000
//   replicas = 200
//   seed = 1
//   functional = range; power:1
//   gamma = exact           # exact | escape:<N> | range | auto
//
//   [step_weights]
//   a = 1                   # free group tokens: a..z generators, A..Z inverses
//   A = 3
//   (1,0,0) = 2             # lattice increments as integer tuples
//
// Values may be quoted. Lists are comma separated; functional lists are
// separated by ';' because table functionals contain commas.
#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lln/functionals.hpp"
#include "lln/group.hpp"
#include "lln/walk.hpp"

namespace lln {

class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  GroupDescriptor group = FreeGroup(2);
  /// Increment literal -> weight; empty means the simple random walk.
  std::vector<std::pair<std::string, double>> step_weights;
  std::vector<std::string> functionals{"range"};
  std::vector<std::uint64_t> checkpoints{1000};
  std::uint64_t replicas = 10;
  std::uint64_t seed = 1;
  std::string gamma_policy = "auto";
  std::uint64_t gamma_replicas = 0;  // 0: same as replicas
  std::uint64_t k_max = 5;
  std::uint64_t j_max = 5;
  std::vector<std::uint64_t> p_list{10};
  std::string control = "power:1";
  std::uint64_t window = 500;
  std::vector<std::uint64_t> offsets{0, 100, 1000};
  std::vector<std::uint64_t> splits;  // empty: quartiles plus two random splits
  std::uint64_t a_horizon = 10000;
  std::uint64_t a_replicas = 20000;
  double tolerance = 0.02;

  std::uint64_t steps() const { return checkpoints.back(); }
  std::uint64_t effective_gamma_replicas() const { return gamma_replicas ? gamma_replicas : replicas; }
};

namespace detail {

inline std::string trim(std::string s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return {};
  s = s.substr(b, e - b + 1);
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'')))
    s = s.substr(1, s.size() - 2);
  return s;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long x = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    x = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (v.empty() || used != v.size()) throw config_error("key '" + key + "': expected a nonnegative integer, got '" + v + "'");
  return x;
}

inline double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (v.empty() || used != v.size()) throw config_error("key '" + key + "': expected a number, got '" + v + "'");
  return x;
}

inline std::vector<std::string> split(const std::string& v, char sep) {
  std::vector<std::string> out;
  std::string s = v;
  if (!s.empty() && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto at = s.find(sep, pos);
    auto tok = trim(s.substr(pos, at == std::string::npos ? std::string::npos : at - pos));
    if (!tok.empty()) out.push_back(tok);
    if (at == std::string::npos) break;
    pos = at + 1;
  }
  return out;
}

inline std::vector<std::uint64_t> parse_u64_list(const std::string& key, const std::string& v) {
  std::vector<std::uint64_t> out;
  for (const auto& t : split(v, ',')) out.push_back(parse_u64(key, t));
  return out;
}

template <class T>
std::string join(const std::vector<T>& xs, const char* sep) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? sep : "") << xs[i];
  return os.str();
}

}  // namespace detail

/// Raw key/value view of a config file before validation.
struct RawConfig {
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, std::string>> step_weights;
  bool has_weights_section = false;
};

inline RawConfig parse_raw(const std::string& text) {
  RawConfig raw;
  std::istringstream in(text);
  std::string line;
  bool in_weights = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // '#' starts a comment unless it sits inside quotes.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    auto t = detail::trim(line);
    if (t.empty()) continue;
    if (t.front() == '[' && t.back() == ']' && t.find('=') == std::string::npos) {
      auto name = detail::trim(t.substr(1, t.size() - 2));
      if (name != "step_weights") throw config_error("line " + std::to_string(lineno) + ": unknown section [" + name + "]");
      in_weights = raw.has_weights_section = true;
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string::npos) throw config_error("line " + std::to_string(lineno) + ": expected key = value");
    auto key = detail::trim(t.substr(0, eq));
    auto value = detail::trim(t.substr(eq + 1));
    if (in_weights)
      raw.step_weights.emplace_back(key, value);
    else
      raw.values[key] = value;
  }
  return raw;
}

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "group", "dim",    "rank",    "steps",   "checkpoints", "replicas", "seed",      "functional", "gamma",
      "gamma_replicas",  "k_max",   "j_max",   "p_list",      "control",  "window",    "offsets",    "splits",
      "a_horizon",       "a_replicas", "tolerance"};
  return keys;
}

/// Validates a raw config with `overrides` (key=value strings) applied on top.
inline ExperimentConfig build_config(RawConfig raw, const std::vector<std::string>& overrides = {}) {
  for (const auto& o : overrides) {
    auto eq = o.find('=');
    if (eq == std::string::npos) throw config_error("override '" + o + "' is not key=value");
    raw.values[detail::trim(o.substr(0, eq))] = detail::trim(o.substr(eq + 1));
  }
  for (const auto& [k, v] : raw.values)
    if (!known_keys().count(k)) throw config_error("unknown config key '" + k + "'");

  ExperimentConfig cfg;
  auto get = [&](const std::string& k) -> const std::string* {
    auto it = raw.values.find(k);
    return it == raw.values.end() ? nullptr : &it->second;
  };

  std::string group = get("group") ? *get("group") : "free";
  if (group == "free") {
    if (get("dim")) throw config_error("key 'dim' applies only to group = lattice");
    auto k = get("rank") ? detail::parse_u64("rank", *get("rank")) : 2;
    if (k < 2) throw config_error("rank >= 2 required for a free group");
    if (k > 26) throw config_error("rank <= 26 required (generator tokens a..z)");
    cfg.group = FreeGroup(static_cast<int>(k));
  } else if (group == "lattice") {
    if (get("rank")) throw config_error("key 'rank' applies only to group = free");
    auto d = get("dim") ? detail::parse_u64("dim", *get("dim")) : 3;
    if (d < 1 || d > 64) throw config_error("dim must satisfy 1 <= dim <= 64");
    cfg.group = Lattice(static_cast<int>(d));
  } else {
    throw config_error("group must be \"lattice\" or \"free\", got '" + group + "'");
  }

  if (get("checkpoints")) {
    cfg.checkpoints = detail::parse_u64_list("checkpoints", *get("checkpoints"));
    if (cfg.checkpoints.empty()) throw config_error("checkpoints must not be empty");
    for (std::size_t i = 0; i < cfg.checkpoints.size(); ++i) {
      if (cfg.checkpoints[i] < 1) throw config_error("checkpoints must be >= 1");
      if (i > 0 && cfg.checkpoints[i] <= cfg.checkpoints[i - 1])
        throw config_error("checkpoints must be strictly increasing");
    }
    if (get("steps") && detail::parse_u64("steps", *get("steps")) != cfg.checkpoints.back())
      throw config_error("steps must equal the last checkpoint when both are given");
  } else if (get("steps")) {
    auto n = detail::parse_u64("steps", *get("steps"));
    if (n < 1) throw config_error("steps >= 1 required");
    cfg.checkpoints = {n};
  }

  if (get("replicas")) cfg.replicas = detail::parse_u64("replicas", *get("replicas"));
  if (cfg.replicas < 2) throw config_error("replicas >= 2 required");
  if (get("seed")) cfg.seed = detail::parse_u64("seed", *get("seed"));
  if (get("gamma_replicas")) cfg.gamma_replicas = detail::parse_u64("gamma_replicas", *get("gamma_replicas"));

  if (get("functional")) {
    cfg.functionals = detail::split(*get("functional"), ';');
    if (cfg.functionals.empty()) throw config_error("functional must not be empty");
  }
  for (const auto& f : cfg.functionals) {
    try {
      validate_functional(f);
    } catch (const std::invalid_argument& e) {
      throw config_error(std::string("functional: ") + e.what());
    }
  }
  if (get("control")) cfg.control = *get("control");
  try {
    if (needs_gamma(cfg.control)) throw std::invalid_argument("control functional cannot depend on gamma");
    validate_functional(cfg.control);
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("control: ") + e.what());
  }

  if (get("gamma")) cfg.gamma_policy = *get("gamma");
  {
    const auto& g = cfg.gamma_policy;
    if (g.rfind("escape:", 0) == 0) {
      if (detail::parse_u64("gamma", g.substr(7)) < 1) throw config_error("gamma escape horizon must be >= 1");
    } else if (g != "exact" && g != "range" && g != "auto") {
      throw config_error("gamma must be exact, escape:<N>, range or auto, got '" + g + "'");
    }
  }

  if (get("k_max")) cfg.k_max = detail::parse_u64("k_max", *get("k_max"));
  if (get("j_max")) cfg.j_max = detail::parse_u64("j_max", *get("j_max"));
  if (cfg.k_max < 1) throw config_error("k_max >= 1 required");
  if (cfg.j_max < 1) throw config_error("j_max >= 1 required");
  if (get("p_list")) cfg.p_list = detail::parse_u64_list("p_list", *get("p_list"));
  if (cfg.p_list.empty()) throw config_error("p_list must not be empty");
  for (auto p : cfg.p_list)
    if (p < 1) throw config_error("p_list entries must be >= 1");
  std::sort(cfg.p_list.begin(), cfg.p_list.end());
  cfg.p_list.erase(std::unique(cfg.p_list.begin(), cfg.p_list.end()), cfg.p_list.end());
  if (get("window")) cfg.window = detail::parse_u64("window", *get("window"));
  if (cfg.window < 1) throw config_error("window >= 1 required");
  if (get("offsets")) cfg.offsets = detail::parse_u64_list("offsets", *get("offsets"));
  if (cfg.offsets.empty()) throw config_error("offsets must not be empty");
  if (get("splits")) cfg.splits = detail::parse_u64_list("splits", *get("splits"));
  if (get("a_horizon")) cfg.a_horizon = detail::parse_u64("a_horizon", *get("a_horizon"));
  if (get("a_replicas")) cfg.a_replicas = detail::parse_u64("a_replicas", *get("a_replicas"));
  if (cfg.a_horizon < 10) throw config_error("a_horizon >= 10 required");
  if (cfg.a_replicas < 2) throw config_error("a_replicas >= 2 required");
  if (get("tolerance")) cfg.tolerance = detail::parse_real("tolerance", *get("tolerance"));
  if (!(cfg.tolerance >= 0.0)) throw config_error("tolerance >= 0 required");

  for (const auto& [lit, w] : raw.step_weights) cfg.step_weights.emplace_back(lit, detail::parse_real(lit, w));
  if (raw.has_weights_section && cfg.step_weights.empty()) throw config_error("[step_weights] section is empty");
  // Surface literal and weight errors at parse time.
  std::visit(
      [&](const auto& g) {
        if (cfg.step_weights.empty()) return;
        try {
          (void)make_distribution(g, cfg.step_weights);
        } catch (const std::invalid_argument& e) {
          throw config_error(std::string("step_weights: ") + e.what());
        }
      },
      cfg.group);
  return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides = {}) {
  return build_config(parse_raw(text), overrides);
}

inline ExperimentConfig parse_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), overrides);
}

/// Fully materialised config in the input grammar; parsing it back yields the same config.
inline std::string to_config_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os.precision(17);
  if (auto* f = std::get_if<FreeGroup>(&c.group))
    os << "group = \"free\"\nrank = " << f->rank << "\n";
  else
    os << "group = \"lattice\"\ndim = " << std::get<Lattice>(c.group).dim << "\n";
  os << "steps = " << c.steps() << "\n";
  os << "checkpoints = " << detail::join(c.checkpoints, ", ") << "\n";
  os << "replicas = " << c.replicas << "\n";
  os << "seed = " << c.seed << "\n";
  os << "functional = \"" << detail::join(c.functionals, "; ") << "\"\n";
  os << "gamma = \"" << c.gamma_policy << "\"\n";
  os << "gamma_replicas = " << c.gamma_replicas << "\n";
  os << "k_max = " << c.k_max << "\n";
  os << "j_max = " << c.j_max << "\n";
  os << "p_list = " << detail::join(c.p_list, ", ") << "\n";
  os << "control = \"" << c.control << "\"\n";
  os << "window = " << c.window << "\n";
  os << "offsets = " << detail::join(c.offsets, ", ") << "\n";
  if (!c.splits.empty()) os << "splits = " << detail::join(c.splits, ", ") << "\n";
  os << "a_horizon = " << c.a_horizon << "\n";
  os << "a_replicas = " << c.a_replicas << "\n";
  os << "tolerance = " << c.tolerance << "\n";
  if (!c.step_weights.empty()) {
    os << "\n[step_weights]\n";
    for (const auto& [lit, w] : c.step_weights) os << lit << " = " << w << "\n";
  }
  return os.str();
}

}  // namespace lln
