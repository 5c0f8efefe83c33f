// Step distributions and walk streams.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lln/group.hpp"
#include "lln/rng.hpp"

namespace lln {

/// Finite-support law of the increments, sampled through a Walker/Vose alias
/// table. Acceptance thresholds are stored as 64-bit integers so a draw is a
/// pure integer operation on one 64-bit PRNG output.
template <class Group>
class StepDistribution {
 public:
  using element_type = typename Group::element_type;

  StepDistribution(Group group, std::vector<std::pair<element_type, double>> weighted)
      : group_(std::move(group)) {
    if (weighted.empty()) throw std::invalid_argument("step distribution needs at least one atom");
    std::set<std::string> seen;
    double total = 0.0;
    bool all_identity = true;
    for (auto& [x, w] : weighted) {
      if (!group_.contains(x)) throw std::invalid_argument("step atom does not belong to the group");
      if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("step weights must be positive and finite");
      if (!seen.insert(group_.encode(x)).second)
        throw std::invalid_argument("step atoms must be distinct (duplicate " + format_element(x) + ")");
      if (!group_.is_identity(x)) all_identity = false;
      total += w;
    }
    if (all_identity) throw std::invalid_argument("step distribution concentrated on the identity never moves");
    for (auto& [x, w] : weighted) {
      atoms_.push_back(std::move(x));
      probs_.push_back(w / total);
    }
    build_alias();
  }

  const Group& group() const { return group_; }
  std::size_t size() const { return atoms_.size(); }
  const std::vector<element_type>& atoms() const { return atoms_; }
  const std::vector<double>& probabilities() const { return probs_; }
  const element_type& atom(std::size_t i) const { return atoms_[i]; }

  std::size_t sample_index(StreamRng& rng) const {
    unsigned __int128 p = static_cast<unsigned __int128>(rng()) * atoms_.size();
    auto column = static_cast<std::size_t>(p >> 64);
    auto coin = static_cast<std::uint64_t>(p);
    return coin < threshold_[column] ? column : alias_[column];
  }

  const element_type& sample(StreamRng& rng) const { return atoms_[sample_index(rng)]; }

 private:
  void build_alias() {
    const std::size_t k = probs_.size();
    std::vector<double> scaled(k);
    std::vector<std::size_t> small, large;
    for (std::size_t i = 0; i < k; ++i) {
      scaled[i] = probs_[i] * static_cast<double>(k);
      (scaled[i] < 1.0 ? small : large).push_back(i);
    }
    threshold_.assign(k, UINT64_MAX);
    alias_.resize(k);
    for (std::size_t i = 0; i < k; ++i) alias_[i] = i;
    while (!small.empty() && !large.empty()) {
      auto s = small.back();
      small.pop_back();
      auto l = large.back();
      threshold_[s] = to_threshold(scaled[s]);
      alias_[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    // Leftovers are full columns up to rounding.
  }

  static std::uint64_t to_threshold(double q) {
    if (q <= 0.0) return 0;
    if (q >= 1.0) return UINT64_MAX;
    return static_cast<std::uint64_t>(std::ldexp(q, 64));
  }

  Group group_;
  std::vector<element_type> atoms_;
  std::vector<double> probs_;
  std::vector<std::uint64_t> threshold_;
  std::vector<std::size_t> alias_;
};

/// Uniform law on the generators and their inverses.
inline StepDistribution<Lattice> standard_srw(const Lattice& g) {
  std::vector<std::pair<LatticePoint, double>> atoms;
  for (int i = 0; i < g.dim; ++i) {
    for (int s : {1, -1}) {
      auto e = g.identity();
      e.coords[static_cast<std::size_t>(i)] = s;
      atoms.emplace_back(std::move(e), 1.0);
    }
  }
  return {g, std::move(atoms)};
}

inline StepDistribution<FreeGroup> standard_srw(const FreeGroup& g) {
  std::vector<std::pair<Word, double>> atoms;
  for (int i = 1; i <= g.rank; ++i) {
    atoms.push_back({Word{{i}}, 1.0});
    atoms.push_back({Word{{-i}}, 1.0});
  }
  return {g, std::move(atoms)};
}

/// Builds a distribution from increment literals; an empty list means the simple random walk.
inline StepDistribution<Lattice> make_distribution(const Lattice& g,
                                                   const std::vector<std::pair<std::string, double>>& weights) {
  if (weights.empty()) return standard_srw(g);
  std::vector<std::pair<LatticePoint, double>> atoms;
  for (const auto& [lit, w] : weights) atoms.emplace_back(parse_lattice_literal(g, lit), w);
  return {g, std::move(atoms)};
}

inline StepDistribution<FreeGroup> make_distribution(const FreeGroup& g,
                                                     const std::vector<std::pair<std::string, double>>& weights) {
  if (weights.empty()) return standard_srw(g);
  std::vector<std::pair<Word, double>> atoms;
  for (const auto& [lit, w] : weights) atoms.emplace_back(parse_word_literal(g, lit), w);
  return {g, std::move(atoms)};
}

template <class Group>
const typename Group::element_type& sample_step(const StepDistribution<Group>& dist, StreamRng& rng) {
  return dist.sample(rng);
}

using AnyStepDistribution = std::variant<StepDistribution<Lattice>, StepDistribution<FreeGroup>>;

inline AnyStepDistribution standard_srw(const GroupDescriptor& g) {
  return std::visit([](const auto& grp) -> AnyStepDistribution { return standard_srw(grp); }, g);
}

/// Streams S_0 = e, S_i = S_{i-1} xi_i for i up to `steps`.
template <class Group>
class WalkStream {
 public:
  using element_type = typename Group::element_type;

  WalkStream(const StepDistribution<Group>& dist, RngSpec spec, std::uint64_t steps)
      : dist_(&dist), rng_(spec), steps_(steps), position_(dist.group().identity()) {}

  const element_type& position() const { return position_; }
  std::uint64_t index() const { return index_; }
  std::uint64_t steps() const { return steps_; }
  bool done() const { return index_ >= steps_; }

  /// Atom index of the most recent increment; meaningless before the first advance.
  std::size_t last_atom() const { return last_atom_; }
  const element_type& last_increment() const { return dist_->atom(last_atom_); }

  bool advance() {
    if (done()) return false;
    last_atom_ = dist_->sample_index(rng_);
    dist_->group().compose_into(position_, dist_->atom(last_atom_));
    ++index_;
    return true;
  }

 private:
  const StepDistribution<Group>* dist_;
  StreamRng rng_;
  std::uint64_t steps_;
  std::uint64_t index_ = 0;
  std::size_t last_atom_ = 0;
  element_type position_;
};

template <class Group>
WalkStream<Group> walk(const StepDistribution<Group>& dist, std::uint64_t steps, RngSpec spec) {
  return WalkStream<Group>(dist, spec, steps);
}

/// Materialises S_0..S_steps. Intended for tests and small trajectories.
template <class Group>
std::vector<typename Group::element_type> collect_positions(const StepDistribution<Group>& dist, std::uint64_t steps,
                                                            RngSpec spec) {
  std::vector<typename Group::element_type> out;
  out.reserve(steps + 1);
  auto stream = walk(dist, steps, spec);
  out.push_back(stream.position());
  while (stream.advance()) out.push_back(stream.position());
  return out;
}

}  // namespace lln
