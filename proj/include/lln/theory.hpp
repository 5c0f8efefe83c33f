// Escape probability, return times and the expected multiple-range lower bound.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lln/local_stats.hpp"
#include "lln/sites.hpp"
#include "lln/stats.hpp"
#include "lln/walk.hpp"

namespace lln {

struct EscapeProbability {
  enum class Source { exact, escape, range };

  double gamma = 1.0;
  Source source = Source::exact;
  std::uint64_t horizon = 0;   // N for escape, n for range
  std::uint64_t replicas = 0;
  double ci_halfwidth = 0.0;   // 95%; Wilson for escape, normal for range
};

inline const char* to_string(EscapeProbability::Source s) {
  switch (s) {
    case EscapeProbability::Source::exact: return "exact";
    case EscapeProbability::Source::escape: return "escape";
    case EscapeProbability::Source::range: return "range";
  }
  return "?";
}

/// Closed form only for the simple random walk on F_k: gamma = (2k-2)/(2k-1).
inline std::optional<EscapeProbability> gamma_exact(const StepDistribution<FreeGroup>& dist) {
  const int k = dist.group().rank;
  if (dist.size() != static_cast<std::size_t>(2 * k)) return std::nullopt;
  std::vector<bool> seen(static_cast<std::size_t>(2 * k), false);
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const auto& w = dist.atom(i).letters;
    if (w.size() != 1) return std::nullopt;
    if (std::fabs(dist.probabilities()[i] - 1.0 / (2.0 * k)) > 1e-12) return std::nullopt;
    auto slot = static_cast<std::size_t>(w[0] > 0 ? w[0] - 1 : k - w[0] - 1);
    seen[slot] = true;
  }
  if (std::count(seen.begin(), seen.end(), true) != 2 * k) return std::nullopt;
  EscapeProbability g;
  g.gamma = (2.0 * k - 2.0) / (2.0 * k - 1.0);
  g.source = EscapeProbability::Source::exact;
  return g;
}

inline std::optional<EscapeProbability> gamma_exact(const StepDistribution<Lattice>&) { return std::nullopt; }

/// Value used when no return happens within the horizon.
inline constexpr std::uint64_t kCensored = std::numeric_limits<std::uint64_t>::max();

/// First return time to e per replica, kCensored when none occurs by `horizon`.
template <class Group>
std::vector<std::uint64_t> first_return_times(const StepDistribution<Group>& dist, std::uint64_t horizon,
                                              std::uint64_t replicas, std::uint64_t seed, unsigned threads,
                                              Lane lane = Lane::walk) {
  std::vector<std::uint64_t> tau(replicas, kCensored);
  for_each_replica(replicas, threads, [&](std::uint64_t r) {
    StreamRng rng({seed, r}, lane);
    ReturnCursor<Group> cur(dist);
    for (std::uint64_t m = 1; m <= horizon; ++m) {
      cur.move(dist.sample_index(rng));
      if (cur.at_identity()) {
        tau[r] = m;
        return;
      }
    }
  });
  return tau;
}

/// Wilson score interval half-width for a binomial proportion.
inline double wilson_halfwidth(double successes, double trials) {
  const double z = kZ95, p = successes / trials;
  return z / (1 + z * z / trials) * std::sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials));
}

/// Fraction of walks with S_m != e for all 1 <= m <= N among first-return samples.
inline EscapeProbability escape_fraction(const std::vector<std::uint64_t>& tau, std::uint64_t horizon) {
  std::uint64_t escaped = 0;
  for (auto t : tau) escaped += (t == kCensored || t > horizon) ? 1 : 0;
  EscapeProbability g;
  g.source = EscapeProbability::Source::escape;
  g.horizon = horizon;
  g.replicas = tau.size();
  g.gamma = static_cast<double>(escaped) / static_cast<double>(tau.size());
  g.ci_halfwidth = wilson_halfwidth(static_cast<double>(escaped), static_cast<double>(tau.size()));
  return g;
}

/// Truncated-horizon escape estimate. Biased upward: returns after N count as escapes,
/// so the estimate is nonincreasing in N on fixed trajectories.
template <class Group>
EscapeProbability gamma_estimate_escape(const StepDistribution<Group>& dist, std::uint64_t horizon,
                                        std::uint64_t replicas, std::uint64_t seed, unsigned threads = 1,
                                        Lane lane = Lane::walk) {
  if (horizon < 1 || replicas < 1) throw std::invalid_argument("escape estimate needs N >= 1 and M >= 1");
  return escape_fraction(first_return_times(dist, horizon, replicas, seed, threads, lane), horizon);
}

/// Range per replica over S_0..S_{n-1}.
template <class Group>
std::vector<double> range_fractions(const StepDistribution<Group>& dist, std::uint64_t n, std::uint64_t replicas,
                                    std::uint64_t seed, unsigned threads, Lane lane = Lane::walk) {
  std::vector<double> out(replicas);
  for_each_replica(replicas, threads, [&](std::uint64_t r) {
    StreamRng rng({seed, r}, lane);
    SiteTracker<Group> sites(dist);
    LocalTimes acc;
    acc.ingest(sites.site());
    for (std::uint64_t i = 1; i < n; ++i) acc.ingest(sites.move(dist.sample_index(rng)));
    out[r] = static_cast<double>(acc.range()) / static_cast<double>(n);
  });
  return out;
}

template <class Group>
EscapeProbability gamma_estimate_range(const StepDistribution<Group>& dist, std::uint64_t n, std::uint64_t replicas,
                                       std::uint64_t seed, unsigned threads = 1, Lane lane = Lane::walk) {
  if (n < 1 || replicas < 1) throw std::invalid_argument("range estimate needs n >= 1 and M >= 1");
  auto xs = range_fractions(dist, n, replicas, seed, threads, lane);
  auto s = summarize(xs);
  EscapeProbability g;
  g.source = EscapeProbability::Source::range;
  g.horizon = n;
  g.replicas = replicas;
  g.gamma = s.mean;
  g.ci_halfwidth = s.ci_halfwidth();
  return g;
}

/// Return times tau_1 < tau_2 < ... to e, censored at a horizon.
struct ReturnTimeStats {
  std::uint64_t horizon = 0;
  std::uint64_t j_max = 0;
  /// Per replica, the finite return times found (at most j_max); fewer than
  /// j_max entries means the next return is censored at the horizon.
  std::vector<std::vector<std::uint64_t>> samples;

  double conditional_mean_a = std::numeric_limits<double>::quiet_NaN();
  double a_ci_halfwidth = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t finite_first_returns = 0;
  bool stabilized = false;
  std::string stability_note;

  /// Empirical P(tau_1 <= horizon).
  double return_fraction() const {
    return samples.empty() ? 0.0 : static_cast<double>(finite_first_returns) / static_cast<double>(samples.size());
  }

  /// Mean of tau_j over replicas where tau_j <= cutoff.
  SampleSummary conditional(std::uint64_t j, std::uint64_t cutoff = kCensored) const {
    std::vector<double> xs;
    for (const auto& s : samples)
      if (s.size() >= j && s[j - 1] <= cutoff) xs.push_back(static_cast<double>(s[j - 1]));
    return summarize(xs);
  }
};

/// Relative CI half-width at or below which the estimate of a counts as stable.
inline constexpr double kStableRelativeCi = 0.05;
/// Allowed relative drift of a between horizon/10 and horizon.
inline constexpr double kStableDrift = 0.01;

template <class Group>
ReturnTimeStats return_times(const StepDistribution<Group>& dist, std::uint64_t horizon, std::uint64_t j_max,
                             std::uint64_t replicas, std::uint64_t seed, unsigned threads = 1,
                             Lane lane = Lane::walk) {
  if (horizon < 1 || j_max < 1) throw std::invalid_argument("return_times needs horizon >= 1 and j_max >= 1");
  ReturnTimeStats st;
  st.horizon = horizon;
  st.j_max = j_max;
  st.samples.resize(replicas);
  for_each_replica(replicas, threads, [&](std::uint64_t r) {
    StreamRng rng({seed, r}, lane);
    ReturnCursor<Group> cur(dist);
    auto& out = st.samples[r];
    for (std::uint64_t m = 1; m <= horizon && out.size() < j_max; ++m) {
      cur.move(dist.sample_index(rng));
      if (cur.at_identity()) out.push_back(m);
    }
  });
  auto all = st.conditional(1);
  st.finite_first_returns = all.count;
  if (all.count == 0) {
    st.stability_note = "no finite return within the horizon";
    return st;
  }
  st.conditional_mean_a = all.mean;
  st.a_ci_halfwidth = all.ci_halfwidth();
  auto early = st.conditional(1, std::max<std::uint64_t>(1, horizon / 10));
  const double drift = early.count > 0 ? std::fabs(all.mean - early.mean) / all.mean : 1.0;
  const double rel_ci = st.a_ci_halfwidth / all.mean;
  st.stabilized = all.count >= 30 && rel_ci <= kStableRelativeCi && drift <= kStableDrift;
  st.stability_note = "relative CI " + std::to_string(rel_ci) + ", drift between horizon/10 and horizon " +
                      std::to_string(drift) + (st.stabilized ? "" : "; heavy-tail suspicion");
  return st;
}

struct BoundRow {
  std::uint64_t j = 0;
  SampleSummary multiple_range;   // R_n^(j)
  SampleSummary tail_time;        // max(n - tau_{j-1}, 0)
  double rhs = 0.0;               // gamma^2 * E max(n - tau_{j-1}, 0)
  double combined_sigma = 0.0;
  bool holds = false;
  // Secondary bound E max(n - tau_{j-1}, 0) >= (n/2)(1-gamma)^{j-1}, evaluated for j <= 1 + n/(2a).
  bool secondary_applicable = false;
  double secondary_bound = 0.0;
  bool secondary_holds = true;
};

struct BoundReport {
  std::uint64_t n = 0;
  std::uint64_t replicas = 0;
  double gamma = 0.0;
  std::optional<double> a;
  std::vector<BoundRow> rows;

  bool all_hold() const {
    for (const auto& r : rows)
      if (!r.holds || !r.secondary_holds) return false;
    return true;
  }
};

/// Monte Carlo check of E R_n^(j) >= gamma^2 E max(n - tau_{j-1}, 0) for j = 1..j_max,
/// both sides from the same replicas, with a 3-sigma combined allowance.
template <class Group>
BoundReport multiple_range_bound_check(const StepDistribution<Group>& dist, std::uint64_t n, std::uint64_t j_max,
                         std::uint64_t replicas, const std::optional<EscapeProbability>& gamma,
                         std::optional<double> a, std::uint64_t seed, unsigned threads = 1) {
  if (!gamma) throw std::invalid_argument("multiple_range_bound_check needs an escape probability");
  if (n < 1 || j_max < 1) throw std::invalid_argument("multiple_range_bound_check needs n >= 1 and j_max >= 1");
  std::vector<std::vector<double>> lhs(j_max, std::vector<double>(replicas));
  std::vector<std::vector<double>> tail(j_max, std::vector<double>(replicas));
  for_each_replica(replicas, threads, [&](std::uint64_t r) {
    StreamRng rng({seed, r});
    SiteTracker<Group> sites(dist);
    LocalTimes acc;
    std::vector<std::uint64_t> tau{0};
    acc.ingest(sites.site());
    for (std::uint64_t i = 1; i < n; ++i) {
      acc.ingest(sites.move(dist.sample_index(rng)));
      if (sites.at_identity() && tau.size() < j_max) tau.push_back(i);
    }
    for (std::uint64_t j = 1; j <= j_max; ++j) {
      lhs[j - 1][r] = static_cast<double>(acc.histogram().count(j));
      tail[j - 1][r] = j - 1 < tau.size() ? static_cast<double>(n - tau[j - 1]) : 0.0;
    }
  });
  BoundReport rep;
  rep.n = n;
  rep.replicas = replicas;
  rep.gamma = gamma->gamma;
  rep.a = a;
  const double g2 = rep.gamma * rep.gamma;
  for (std::uint64_t j = 1; j <= j_max; ++j) {
    BoundRow row;
    row.j = j;
    row.multiple_range = summarize(lhs[j - 1]);
    row.tail_time = summarize(tail[j - 1]);
    row.rhs = g2 * row.tail_time.mean;
    row.combined_sigma = std::sqrt(std::pow(row.multiple_range.std_error(), 2) +
                                   std::pow(g2 * row.tail_time.std_error(), 2));
    row.holds = row.multiple_range.mean >= row.rhs - 3.0 * row.combined_sigma;
    if (a && j <= 1 + static_cast<double>(n) / (2.0 * *a)) {
      row.secondary_applicable = true;
      row.secondary_bound = 0.5 * static_cast<double>(n) * std::pow(1.0 - rep.gamma, static_cast<double>(j - 1));
      row.secondary_holds = row.tail_time.mean + 3.0 * row.tail_time.std_error() >= row.secondary_bound;
    }
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace lln
