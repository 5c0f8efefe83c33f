// Functionals f: Z_+ -> R with f(0) = 0 acting on local times, their
// truncations and the summability conditions that gate the limit theorems.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lln {

/// A condition check was asked for an escape probability outside its domain,
/// or a limit was requested for a functional whose condition fails.
class condition_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class LocalFunctional {
 public:
  enum class Family { indicator_range, indicator_level, power, h_shift, geometric_half, user_table, truncated };

  /// Growth envelope used to bound series tails: |f(j)| <= scale * j^exponent * base^j
  /// for every j >= 1, or zero beyond `support` when finite.
  struct Envelope {
    double scale = 1.0;
    double exponent = 0.0;
    double base = 1.0;
    std::optional<std::uint64_t> support;
  };

  /// f(i) = 1{i >= 1}; G_n(f) is the range.
  static LocalFunctional range() { return LocalFunctional(Family::indicator_range); }

  /// f(i) = 1{i = j}; G_n(f) is the j-multiple range.
  static LocalFunctional level(std::uint64_t j) {
    if (j < 1) throw std::invalid_argument("level index must be >= 1");
    LocalFunctional f(Family::indicator_level);
    f.index_ = j;
    return f;
  }

  static LocalFunctional power(double alpha) {
    if (!std::isfinite(alpha)) throw std::invalid_argument("power exponent must be finite");
    LocalFunctional f(Family::power);
    f.real_ = alpha;
    return f;
  }

  /// h^(j)(l) = max(l + 1 - j, 0).
  static LocalFunctional h_shift(std::uint64_t j) {
    if (j < 1) throw std::invalid_argument("h-shift index must be >= 1");
    LocalFunctional f(Family::h_shift);
    f.index_ = j;
    return f;
  }

  /// f(j) = (1 - gamma)^(-j/2).
  static LocalFunctional geometric_half(double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("geomhalf needs gamma in (0,1)");
    LocalFunctional f(Family::geometric_half);
    f.real_ = gamma;
    return f;
  }

  /// f(j) = values[j-1] for 1 <= j <= values.size(), zero elsewhere.
  static LocalFunctional table(std::vector<double> values) {
    for (double v : values)
      if (!std::isfinite(v)) throw std::invalid_argument("table values must be finite");
    LocalFunctional f(Family::user_table);
    f.table_ = std::make_shared<const std::vector<double>>(std::move(values));
    return f;
  }

  Family family() const { return family_; }
  std::uint64_t index() const { return index_; }
  double parameter() const { return real_; }
  const LocalFunctional* inner() const { return inner_.get(); }

  double operator()(std::uint64_t j) const {
    if (j == 0) return 0.0;
    switch (family_) {
      case Family::indicator_range: return 1.0;
      case Family::indicator_level: return j == index_ ? 1.0 : 0.0;
      case Family::power: return std::pow(static_cast<double>(j), real_);
      case Family::h_shift: return j + 1 > index_ ? static_cast<double>(j + 1 - index_) : 0.0;
      case Family::geometric_half: return std::pow(1.0 - real_, -0.5 * static_cast<double>(j));
      case Family::user_table: return j <= table_->size() ? (*table_)[j - 1] : 0.0;
      case Family::truncated: return j <= index_ ? (*inner_)(j) : 0.0;
    }
    return 0.0;
  }

  /// True when every value is an integer small enough to add exactly in a double.
  bool integer_valued() const {
    switch (family_) {
      case Family::indicator_range:
      case Family::indicator_level:
      case Family::h_shift: return true;
      case Family::power: return real_ >= 0.0 && real_ == std::floor(real_) && real_ <= 3.0;
      case Family::geometric_half: return false;
      case Family::user_table:
        for (double v : *table_)
          if (v != std::floor(v) || std::fabs(v) > 0x1p40) return false;
        return true;
      case Family::truncated: return inner_->integer_valued();
    }
    return false;
  }

  Envelope envelope() const {
    switch (family_) {
      case Family::indicator_range: return {};
      case Family::indicator_level: return {1.0, 0.0, 1.0, index_};
      case Family::power: return {1.0, std::max(real_, 0.0), 1.0, std::nullopt};
      case Family::h_shift: return {1.0, 1.0, 1.0, std::nullopt};
      case Family::geometric_half: return {1.0, 0.0, std::pow(1.0 - real_, -0.5), std::nullopt};
      case Family::user_table: {
        double m = 0.0;
        for (double v : *table_) m = std::max(m, std::fabs(v));
        return {m, 0.0, 1.0, static_cast<std::uint64_t>(table_->size())};
      }
      case Family::truncated: {
        auto e = inner_->envelope();
        e.support = e.support ? std::min(*e.support, index_) : index_;
        return e;
      }
    }
    return {};
  }

  /// Spelling in the config grammar ("range", "level:2", "power:1", ...).
  std::string id() const {
    std::ostringstream os;
    os.precision(17);
    switch (family_) {
      case Family::indicator_range: return "range";
      case Family::indicator_level: return "level:" + std::to_string(index_);
      case Family::power: os << "power:" << real_; return os.str();
      case Family::h_shift: return "hshift:" + std::to_string(index_);
      case Family::geometric_half: return "geomhalf";
      case Family::user_table: {
        os << "table:";
        for (std::size_t i = 0; i < table_->size(); ++i) os << (i ? "," : "") << (*table_)[i];
        return os.str();
      }
      case Family::truncated: return inner_->id() + "|p" + std::to_string(index_);
    }
    return "?";
  }

  friend LocalFunctional truncate(const LocalFunctional& f, std::uint64_t p);

 private:
  explicit LocalFunctional(Family fam) : family_(fam) {}

  Family family_;
  std::uint64_t index_ = 0;
  double real_ = 0.0;
  std::shared_ptr<const std::vector<double>> table_;
  std::shared_ptr<const LocalFunctional> inner_;
};

inline double evaluate(const LocalFunctional& f, std::uint64_t j) { return f(j); }

/// f^(p)(l) = 1{l <= p} f(l).
inline LocalFunctional truncate(const LocalFunctional& f, std::uint64_t p) {
  if (p < 1) throw std::invalid_argument("truncation level must be >= 1");
  LocalFunctional t(LocalFunctional::Family::truncated);
  t.index_ = p;
  t.inner_ = std::make_shared<const LocalFunctional>(f);
  return t;
}

enum class Verdict { holds, fails, undecidable };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::fails: return "fails";
    case Verdict::undecidable: return "undecidable";
  }
  return "?";
}

struct ConditionVerdict {
  Verdict verdict;
  std::string certificate;
};

namespace detail {

inline void require_gamma(double gamma) {
  // gamma = 1 is admitted: the walk never returns and every summand vanishes.
  if (!(gamma > 0.0 && gamma <= 1.0)) throw condition_error("escape probability must lie in (0,1]");
}

// |f(j)|^power (1-gamma)^j / j^shift for a geometric_half functional has
// ratio (1-gamma) / (1-gamma_f)^(power/2); decide by comparing it with 1.
inline ConditionVerdict geometric_verdict(double gamma_f, double gamma, int power, int shift) {
  double ratio = (1.0 - gamma) / std::pow(1.0 - gamma_f, 0.5 * power);
  std::ostringstream os;
  os.precision(17);
  if (gamma_f == gamma && power == 2 && shift == 1)
    return {Verdict::fails, "summand = 1/j, harmonic divergence"};
  if (std::fabs(ratio - 1.0) < 1e-9)
    return {Verdict::undecidable, "ratio within 1e-9 of 1; geomhalf gamma differs from walk gamma only by rounding"};
  if (ratio < 1.0) {
    os << "geometric summand with ratio " << ratio << " < 1";
    return {Verdict::holds, os.str()};
  }
  os << "summand ratio " << ratio << " >= 1, terms do not vanish";
  return {Verdict::fails, os.str()};
}

}  // namespace detail

/// sum_j |f(j)| (1-gamma)^j < infinity, decided per family.
inline ConditionVerdict check_condition_l1(const LocalFunctional& f, double gamma) {
  detail::require_gamma(gamma);
  using F = LocalFunctional::Family;
  if (gamma == 1.0) return {Verdict::holds, "gamma = 1: every summand vanishes"};
  switch (f.family()) {
    case F::indicator_range: return {Verdict::holds, "geometric series in (1-gamma)"};
    case F::indicator_level: return {Verdict::holds, "single nonzero term"};
    case F::power: return {Verdict::holds, "polynomial times geometric"};
    case F::h_shift: return {Verdict::holds, "linear times geometric"};
    case F::user_table: return {Verdict::holds, "finite support"};
    case F::truncated: return {Verdict::holds, "finite support"};
    case F::geometric_half: {
      auto v = detail::geometric_verdict(f.parameter(), gamma, 1, 0);
      if (v.verdict == Verdict::holds && f.parameter() == gamma) v.certificate = "summand (1-gamma)^(j/2), geometric";
      return v;
    }
  }
  return {Verdict::undecidable, "unknown family"};
}

/// sum_j f(j)^2 (1-gamma)^j / j < infinity, decided per family.
inline ConditionVerdict check_condition_l2(const LocalFunctional& f, double gamma) {
  detail::require_gamma(gamma);
  using F = LocalFunctional::Family;
  if (gamma == 1.0) return {Verdict::holds, "gamma = 1: every summand vanishes"};
  switch (f.family()) {
    case F::indicator_range: return {Verdict::holds, "geometric over j"};
    case F::indicator_level: return {Verdict::holds, "single nonzero term"};
    case F::power: return {Verdict::holds, "polynomial squared times geometric over j"};
    case F::h_shift: return {Verdict::holds, "quadratic times geometric over j"};
    case F::user_table: return {Verdict::holds, "finite support"};
    case F::truncated: return {Verdict::holds, "finite support"};
    case F::geometric_half: return detail::geometric_verdict(f.parameter(), gamma, 2, 1);
  }
  return {Verdict::undecidable, "unknown family"};
}

/// gamma^2 sum_{j > from} f(j) (1-gamma)^(j-1), truncated once the envelope
/// bound on the remaining tail drops below rel_tol * |partial sum| (or below
/// rel_tol when the partial sum is still zero).
inline double limit_tail(const LocalFunctional& f, double gamma, std::uint64_t from, double rel_tol) {
  detail::require_gamma(gamma);
  if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be positive");
  auto v = check_condition_l1(f, gamma);
  if (v.verdict != Verdict::holds)
    throw condition_error("summability condition does not hold for " + f.id() + ": " + v.certificate);
  const double x = 1.0 - gamma;
  const auto env = f.envelope();
  // Compensated partial sum.
  double sum = 0.0, comp = 0.0;
  auto add = [&](double t) {
    double s = sum + t;
    comp += std::fabs(sum) >= std::fabs(t) ? (sum - s) + t : (t - s) + sum;
    sum = s;
  };
  const std::uint64_t kMaxTerms = 1u << 22;
  for (std::uint64_t j = from + 1; j < from + kMaxTerms; ++j) {
    if (env.support && j > *env.support) break;
    const double xj = std::pow(x, static_cast<double>(j - 1));
    if (xj == 0.0 && env.base <= 1.0) break;
    add(f(j) * xj);
    // Envelope term ratio beyond j is at most ((j+1)/j)^a * base * x.
    const double q = std::pow(static_cast<double>(j + 1) / static_cast<double>(j), env.exponent) * env.base * x;
    if (q < 1.0) {
      const double next = env.scale * std::pow(static_cast<double>(j + 1), env.exponent) *
                          std::pow(env.base, static_cast<double>(j + 1)) * std::pow(x, static_cast<double>(j));
      const double tail = next / (1.0 - q);
      const double total = std::fabs(sum + comp);
      if (tail <= rel_tol * total || (total == 0.0 && tail <= rel_tol)) break;
    }
  }
  return gamma * gamma * (sum + comp);
}

/// gamma^2 sum_{j >= 1} f(j) (1-gamma)^(j-1).
/// Closed forms where the series sums exactly; otherwise the envelope-truncated series.
inline double theoretical_limit(const LocalFunctional& f, double gamma, double rel_tol = 1e-12) {
  using F = LocalFunctional::Family;
  detail::require_gamma(gamma);
  const double x = 1.0 - gamma;
  switch (f.family()) {
    case F::indicator_range: return gamma;
    case F::indicator_level: return gamma * gamma * std::pow(x, static_cast<double>(f.index() - 1));
    case F::h_shift: return std::pow(x, static_cast<double>(f.index() - 1));
    case F::power:
      if (f.parameter() == 0.0) return gamma;
      if (f.parameter() == 1.0) return 1.0;
      break;
    default: break;
  }
  return limit_tail(f, gamma, 0, rel_tol);
}

/// Parses the config grammar: range | level:<j> | power:<alpha> | hshift:<j> |
/// geomhalf | table:<v1,v2,...>. `geomhalf` needs the resolved gamma.
inline LocalFunctional parse_functional(const std::string& text, std::optional<double> gamma = std::nullopt) {
  auto colon = text.find(':');
  std::string head = text.substr(0, colon);
  std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  auto need_arg = [&] {
    if (arg.empty()) throw std::invalid_argument("functional '" + text + "' needs an argument");
  };
  auto as_index = [&]() -> std::uint64_t {
    need_arg();
    std::size_t used = 0;
    long long v = -1;
    try {
      v = std::stoll(arg, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != arg.size() || v < 1) throw std::invalid_argument("functional '" + text + "' needs a positive integer");
    return static_cast<std::uint64_t>(v);
  };
  auto as_real = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty()) throw std::invalid_argument("functional '" + text + "' has a bad number");
    return v;
  };
  if (head == "range" && arg.empty()) return LocalFunctional::range();
  if (head == "level") return LocalFunctional::level(as_index());
  if (head == "hshift") return LocalFunctional::h_shift(as_index());
  if (head == "power") {
    need_arg();
    return LocalFunctional::power(as_real(arg));
  }
  if (head == "geomhalf" && arg.empty()) {
    if (!gamma) throw std::invalid_argument("geomhalf needs a resolved gamma");
    return LocalFunctional::geometric_half(*gamma);
  }
  if (head == "table") {
    need_arg();
    std::vector<double> values;
    std::size_t pos = 0;
    while (true) {
      auto comma = arg.find(',', pos);
      values.push_back(as_real(arg.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos)));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    return LocalFunctional::table(std::move(values));
  }
  throw std::invalid_argument("unknown functional '" + text + "'");
}

/// True when the functional string names a functional whose definition depends on gamma.
inline bool needs_gamma(const std::string& text) { return text == "geomhalf"; }

/// Syntax check without resolving gamma-dependent families.
inline void validate_functional(const std::string& text) {
  if (needs_gamma(text)) return;
  (void)parse_functional(text);
}

}  // namespace lln
