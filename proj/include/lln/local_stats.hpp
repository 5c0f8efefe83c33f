// Streaming local-time accumulator.
//
// LocalTimes ingests one site per position and keeps, in amortised
// O(1 + #sums) per position:
//   - the local-time table l(n-1, x), as a flat count array indexed by SiteId;
//   - the multiplicity histogram R_n^(k) and the range R_n;
//   - running sums G_n(f) = sum_x f(l(n-1, x)) for attached functionals.
// Trajectory-level helpers (direct sums, windows, identity verification)
// replay explicit position sequences and never touch the incremental state.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lln/functionals.hpp"
#include "lln/group.hpp"
#include "lln/sites.hpp"

namespace lln {

/// Neumaier-compensated sum.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    comp_ += std::fabs(sum_) >= std::fabs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// R^(k) counts: dense below kDense, sparse above. Keys with zero count are absent.
class MultiplicityHistogram {
 public:
  static constexpr std::uint64_t kDense = 64;

  /// One site moves from multiplicity `from` to `from + 1`; from = 0 means a new site.
  void promote(std::uint64_t from) {
    if (from == 0)
      ++range_;
    else
      dec(from);
    inc(from + 1);
    ++weight_;
  }

  std::uint64_t count(std::uint64_t k) const {
    if (k == 0) return 0;
    if (k < kDense) return dense_[k];
    auto it = sparse_.find(k);
    return it == sparse_.end() ? 0 : it->second;
  }

  std::uint64_t range() const { return range_; }
  /// sum_k k R^(k); equals the number of positions ingested.
  std::uint64_t weight() const { return weight_; }
  std::uint64_t max_multiplicity() const { return max_k_; }

  /// Visits nonzero (k, R^(k)) in increasing k.
  template <class Fn>
  void for_each(Fn&& fn) const {
    for (std::uint64_t k = 1; k < kDense && k <= max_k_; ++k)
      if (dense_[k] != 0) fn(k, dense_[k]);
    for (const auto& [k, c] : sparse_) fn(k, c);
  }

  std::vector<std::pair<std::uint64_t, std::uint64_t>> entries() const {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
    for_each([&](std::uint64_t k, std::uint64_t c) { out.emplace_back(k, c); });
    return out;
  }

 private:
  void inc(std::uint64_t k) {
    if (k < kDense)
      ++dense_[k];
    else
      ++sparse_[k];
    if (k > max_k_) max_k_ = k;
  }
  void dec(std::uint64_t k) {
    if (k < kDense) {
      --dense_[k];
    } else {
      auto it = sparse_.find(k);
      if (--it->second == 0) sparse_.erase(it);
    }
  }

  std::array<std::uint64_t, kDense> dense_{};
  std::map<std::uint64_t, std::uint64_t> sparse_;
  std::uint64_t range_ = 0;
  std::uint64_t weight_ = 0;
  std::uint64_t max_k_ = 0;
};

/// G_n(f) maintained through the increments f(c+1) - f(c).
class RunningFunctionalSum {
 public:
  explicit RunningFunctionalSum(LocalFunctional f) : f_(std::move(f)), values_{0.0} {}

  void on_promote(std::uint64_t from) {
    while (values_.size() <= from + 1) values_.push_back(f_(values_.size()));
    sum_.add(values_[from + 1] - values_[from]);
  }

  double value() const { return sum_.value(); }
  const LocalFunctional& functional() const { return f_; }

 private:
  LocalFunctional f_;
  std::vector<double> values_;
  CompensatedSum sum_;
};

/// Snapshot of an accumulator, the unit exported to JSON/CSV.
struct LocalTimeSnapshot {
  static constexpr int kSchemaVersion = 1;
  std::uint64_t n = 0;
  std::uint64_t range = 0;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> histogram;
  std::vector<std::pair<std::string, double>> g_values;
};

/// G_n(f) = sum_k f(k) R^(k) over a histogram.
inline double g_from_histogram(const MultiplicityHistogram& h, const LocalFunctional& f) {
  CompensatedSum s;
  h.for_each([&](std::uint64_t k, std::uint64_t c) { s.add(f(k) * static_cast<double>(c)); });
  return s.value();
}

inline double g_from_histogram(std::span<const std::pair<std::uint64_t, std::uint64_t>> h, const LocalFunctional& f) {
  CompensatedSum s;
  for (auto [k, c] : h) s.add(f(k) * static_cast<double>(c));
  return s.value();
}

class LocalTimes {
 public:
  LocalTimes() = default;
  explicit LocalTimes(std::vector<LocalFunctional> fs) {
    for (auto& f : fs) sums_.emplace_back(std::move(f));
  }

  void ingest(SiteId site) {
    if (site >= counts_.size()) counts_.resize(std::max<std::size_t>(site + 1, 2 * counts_.size()), 0);
    std::uint64_t c = counts_[site]++;
    hist_.promote(c);
    for (auto& s : sums_) s.on_promote(c);
    ++n_;
  }

  /// Ingest an explicit position through a tracker's interning.
  template <class Group>
  void ingest(SiteTracker<Group>& sites, const typename Group::element_type& position) {
    ingest(sites.intern(position));
  }

  std::uint64_t n() const { return n_; }
  std::uint64_t range() const { return hist_.range(); }
  std::uint32_t count(SiteId site) const { return site < counts_.size() ? counts_[site] : 0; }
  const std::vector<std::uint32_t>& counts() const { return counts_; }
  const MultiplicityHistogram& histogram() const { return hist_; }
  const std::vector<RunningFunctionalSum>& sums() const { return sums_; }

  LocalTimeSnapshot snapshot() const {
    LocalTimeSnapshot s;
    s.n = n_;
    s.range = hist_.range();
    s.histogram = hist_.entries();
    for (const auto& r : sums_) s.g_values.emplace_back(r.functional().id(), r.value());
    return s;
  }

 private:
  std::vector<std::uint32_t> counts_;
  MultiplicityHistogram hist_;
  std::vector<RunningFunctionalSum> sums_;
  std::uint64_t n_ = 0;
};

/// Multiplicity histogram of an explicit key sequence, via an ordered map.
template <class Key>
std::map<std::uint64_t, std::uint64_t> window_histogram(std::span<const Key> keys) {
  std::unordered_map<Key, std::uint64_t> counts;
  for (const auto& k : keys) ++counts[k];
  std::map<std::uint64_t, std::uint64_t> hist;
  for (const auto& [k, c] : counts) ++hist[c];
  return hist;
}

/// Oracle for the incremental path: builds a fresh table keyed by canonical
/// encodings of S_0..S_{n-1} and returns sum_x f(l(n-1, x)).
template <class Group>
double g_sum_direct(const Group& group, std::span<const typename Group::element_type> trajectory,
                    const LocalFunctional& f) {
  if (trajectory.empty()) throw std::invalid_argument("trajectory must be nonempty");
  std::map<std::string, std::uint64_t> table;
  for (const auto& x : trajectory) ++table[group.encode(x)];
  CompensatedSum s;
  for (const auto& [key, c] : table) s.add(f(c));
  return s.value();
}

inline double g_sum_direct(const GroupDescriptor& g, std::span<const GroupElement> trajectory,
                           const LocalFunctional& f) {
  if (trajectory.empty()) throw std::invalid_argument("trajectory must be nonempty");
  std::map<std::string, std::uint64_t> table;
  for (const auto& x : trajectory) ++table[canonical_encode(g, x)];
  CompensatedSum s;
  for (const auto& [key, c] : table) s.add(f(c));
  return s.value();
}

namespace detail {

inline void check_window(std::size_t size, std::uint64_t m, std::uint64_t n) {
  if (!(m < n && n <= size))
    throw std::out_of_range("window [" + std::to_string(m) + "," + std::to_string(n) + ") outside trajectory of " +
                            std::to_string(size) + " positions");
}

}  // namespace detail

/// G_{m,n}(f): f applied to visit counts of S_m..S_{n-1}.
template <class Group>
double g_window(const Group& group, std::span<const typename Group::element_type> trajectory, std::uint64_t m,
                std::uint64_t n, const LocalFunctional& f) {
  detail::check_window(trajectory.size(), m, n);
  return g_sum_direct(group, trajectory.subspan(m, n - m), f);
}

/// G_{m,n}(f) over an interned site sequence.
inline double g_window(std::span<const SiteId> sites, std::uint64_t m, std::uint64_t n, const LocalFunctional& f) {
  detail::check_window(sites.size(), m, n);
  CompensatedSum s;
  for (auto [k, c] : window_histogram<SiteId>(sites.subspan(m, n - m))) s.add(f(k) * static_cast<double>(c));
  return s.value();
}

struct IdentityCheck {
  std::string name;
  bool passed = true;
  std::string detail;
};

/// Outcome of the exact trajectory identities; every check is integer arithmetic.
struct IdentityReport {
  std::vector<IdentityCheck> checks;
  std::uint64_t evaluated = 0;
  std::uint64_t failed = 0;

  bool all_passed() const { return failed == 0; }

  void record(std::string name, bool ok, std::string detail = {}) {
    ++evaluated;
    if (!ok) {
      ++failed;
      checks.push_back({std::move(name), false, std::move(detail)});
    }
  }
};

namespace detail {

/// G(h^(j)) = sum_k (k + 1 - j) R^(k) for k >= j, exact.
inline std::int64_t h_sum(const std::map<std::uint64_t, std::uint64_t>& hist, std::uint64_t j) {
  std::int64_t s = 0;
  for (auto [k, c] : hist)
    if (k >= j) s += static_cast<std::int64_t>((k + 1 - j) * c);
  return s;
}

}  // namespace detail

/// Checks, exactly:
///  (a) sum_k k R^(k) = n (and the table counts add up to n);
///  (b) for j <= j_max: sum_x h^(j)(l(x)) over the table equals
///      sum_{k>=j} (k+1-j) R^(k), and n - G_n(h^(j)) = (j-1) R_n - sum_{k<j} (j-1-k) R^(k);
///  (c) for each split m: G_{0,m}(h^(j)) + G_{m,n}(h^(j)) <= G_{0,n}(h^(j)).
/// `trajectory` must be the site sequence the accumulator ingested.
inline IdentityReport verify_identities(const LocalTimes& acc, std::span<const SiteId> trajectory,
                                        std::uint64_t j_max, std::span<const std::uint64_t> split_points) {
  const std::uint64_t n = acc.n();
  if (trajectory.size() != n)
    throw std::invalid_argument("trajectory length " + std::to_string(trajectory.size()) +
                                " does not match accumulator n = " + std::to_string(n));
  IdentityReport rep;
  std::map<std::uint64_t, std::uint64_t> hist;
  acc.histogram().for_each([&](std::uint64_t k, std::uint64_t c) { hist[k] = c; });

  std::uint64_t weighted = 0, range = 0, table_total = 0, table_range = 0;
  for (auto [k, c] : hist) {
    weighted += k * c;
    range += c;
  }
  for (auto c : acc.counts()) {
    table_total += c;
    table_range += c != 0 ? 1 : 0;
  }
  rep.record("sum_k k R^(k) = n", weighted == n,
             "sum k R^(k) = " + std::to_string(weighted) + ", n = " + std::to_string(n));
  rep.record("table counts sum to n", table_total == n && table_range == range && range == acc.range(),
             "table total " + std::to_string(table_total));

  const auto sn = static_cast<std::int64_t>(n);
  const auto sr = static_cast<std::int64_t>(range);
  for (std::uint64_t j = 1; j <= j_max; ++j) {
    std::int64_t from_table = 0;
    for (auto c : acc.counts())
      if (c + 1 > j) from_table += static_cast<std::int64_t>(c + 1 - j);
    const std::int64_t from_hist = detail::h_sum(hist, j);
    rep.record("G_n(h^(j)) table = histogram", from_table == from_hist,
               "j=" + std::to_string(j) + ": " + std::to_string(from_table) + " vs " + std::to_string(from_hist));
    std::int64_t rhs = static_cast<std::int64_t>(j - 1) * sr;
    for (auto [k, c] : hist)
      if (k < j) rhs -= static_cast<std::int64_t>((j - 1 - k) * c);
    rep.record("n - G_n(h^(j)) = (j-1)R_n - sum (j-1-k)R^(k)", sn - from_hist == rhs,
               "j=" + std::to_string(j) + ": " + std::to_string(sn - from_hist) + " vs " + std::to_string(rhs));
  }

  for (auto m : split_points) {
    if (!(m > 0 && m < n)) throw std::out_of_range("split point " + std::to_string(m) + " not in (0, n)");
    auto left = window_histogram<SiteId>(trajectory.subspan(0, m));
    auto right = window_histogram<SiteId>(trajectory.subspan(m));
    for (std::uint64_t j = 1; j <= j_max; ++j) {
      auto l = detail::h_sum(left, j), r = detail::h_sum(right, j), whole = detail::h_sum(hist, j);
      rep.record("G_{0,m} + G_{m,n} <= G_{0,n} for h^(j)", l + r <= whole,
                 "m=" + std::to_string(m) + " j=" + std::to_string(j) + ": " + std::to_string(l) + " + " +
                     std::to_string(r) + " > " + std::to_string(whole));
    }
  }
  return rep;
}

}  // namespace lln
