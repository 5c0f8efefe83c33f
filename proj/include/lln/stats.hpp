// Replica fan-out and order-independent summaries.
//
// Every replica writes its own slot of a result vector; summaries are then
// computed in replica order, so output never depends on how many workers ran
// or in which order they finished.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace lln {

/// Two-sided 95% normal quantile used for every reported CI half-width.
inline constexpr double kZ95 = 1.959963984540054;

struct SampleSummary {
  std::uint64_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased; zero when count < 2
  double min = 0.0;
  double max = 0.0;

  double std_error() const { return count > 0 ? std::sqrt(variance / static_cast<double>(count)) : 0.0; }
  double ci_halfwidth() const { return kZ95 * std_error(); }
  /// Normal-approximation CIs are flagged below 30 replicas.
  bool small_sample() const { return count < 30; }
};

inline SampleSummary summarize(std::span<const double> xs) {
  SampleSummary s;
  s.count = xs.size();
  if (xs.empty()) {
    s.mean = s.variance = s.min = s.max = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  long double total = 0.0L;
  s.min = s.max = xs[0];
  for (double x : xs) {
    total += x;
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
  }
  s.mean = static_cast<double>(total / static_cast<long double>(xs.size()));
  if (xs.size() > 1) {
    long double ss = 0.0L;
    for (double x : xs) {
      long double d = static_cast<long double>(x) - s.mean;
      ss += d * d;
    }
    s.variance = static_cast<double>(ss / static_cast<long double>(xs.size() - 1));
  }
  return s;
}

/// Worker count: LLN_THREADS when set to a positive integer, else hardware concurrency.
inline unsigned thread_count() {
  if (const char* env = std::getenv("LLN_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(r) for r in [0, count) on up to `threads` workers. The first
/// exception thrown by any replica is rethrown after all workers join.
template <class Fn>
void for_each_replica(std::uint64_t count, unsigned threads, Fn&& fn) {
  threads = static_cast<unsigned>(std::min<std::uint64_t>(std::max(1u, threads), std::max<std::uint64_t>(count, 1)));
  if (threads == 1) {
    for (std::uint64_t r = 0; r < count; ++r) fn(r);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      auto r = next.fetch_add(1);
      if (r >= count) return;
      try {
        fn(r);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

/// Least-squares slope of ys against xs.
inline double ls_slope(std::span<const double> xs, std::span<const double> ys) {
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace lln
