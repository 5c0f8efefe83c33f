// Site interning: maps visited group elements to dense site ids while the
// walk moves, so local-time storage is a flat array indexed by site.
//
// Lattice sites live in an open-addressing table keyed by the coordinate
// vector (equivalently, by its canonical encoding), hashed with the
// splitmix64 finaliser chained over the coordinates. Free-group sites are the
// nodes of a trie of reduced words: moving by a letter either steps to the
// parent (cancellation) or to a child, so interning is exact and O(1) per
// letter with no hashing at all.
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "lln/group.hpp"
#include "lln/walk.hpp"

namespace lln {

using SiteId = std::uint32_t;

namespace detail {

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Open-addressing map from fixed-width coordinate vectors to dense ids.
class CoordinateTable {
 public:
  explicit CoordinateTable(int dim) : dim_(static_cast<std::size_t>(dim)) { rehash(1024); }

  static std::uint64_t hash(const std::int64_t* c, std::size_t dim) {
    std::uint64_t h = 0x9E3779B97F4A7C15ULL * (dim + 1);
    for (std::size_t i = 0; i < dim; ++i) h = mix64(h ^ static_cast<std::uint64_t>(c[i]));
    return h;
  }

  SiteId intern(const std::int64_t* c) {
    if (2 * (size_ + 1) > capacity_) rehash(2 * capacity_);
    auto slot = find_slot(c);
    if (ids_[slot] == kEmpty) {
      ids_[slot] = static_cast<SiteId>(size_++);
      std::copy(c, c + dim_, keys_.begin() + static_cast<std::ptrdiff_t>(slot * dim_));
    }
    return ids_[slot];
  }

  std::size_t size() const { return size_; }

  void clear() {
    std::fill(ids_.begin(), ids_.end(), kEmpty);
    size_ = 0;
  }

 private:
  static constexpr SiteId kEmpty = std::numeric_limits<SiteId>::max();

  std::size_t find_slot(const std::int64_t* c) const {
    std::size_t mask = capacity_ - 1;
    std::size_t slot = hash(c, dim_) & mask;
    while (ids_[slot] != kEmpty) {
      const std::int64_t* k = keys_.data() + slot * dim_;
      bool same = true;
      for (std::size_t i = 0; i < dim_; ++i) same &= (k[i] == c[i]);
      if (same) return slot;
      slot = (slot + 1) & mask;
    }
    return slot;
  }

  void rehash(std::size_t cap) {
    std::vector<std::int64_t> old_keys = std::move(keys_);
    std::vector<SiteId> old_ids = std::move(ids_);
    capacity_ = cap;
    keys_.assign(cap * dim_, 0);
    ids_.assign(cap, kEmpty);
    for (std::size_t s = 0; s < old_ids.size(); ++s) {
      if (old_ids[s] == kEmpty) continue;
      const std::int64_t* k = old_keys.data() + s * dim_;
      auto slot = find_slot(k);
      ids_[slot] = old_ids[s];
      std::copy(k, k + dim_, keys_.begin() + static_cast<std::ptrdiff_t>(slot * dim_));
    }
  }

  std::size_t dim_;
  std::size_t capacity_ = 0;
  std::size_t size_ = 0;
  std::vector<std::int64_t> keys_;
  std::vector<SiteId> ids_;
};

}  // namespace detail

template <class Group>
class SiteTracker;

template <>
class SiteTracker<Lattice> {
 public:
  explicit SiteTracker(const StepDistribution<Lattice>& dist)
      : group_(dist.group()), dim_(static_cast<std::size_t>(dist.group().dim)), table_(dist.group().dim) {
    for (const auto& a : dist.atoms()) deltas_.insert(deltas_.end(), a.coords.begin(), a.coords.end());
    reset();
  }

  /// Returns to the identity and forgets every interned site.
  SiteId reset() {
    table_.clear();
    coords_.assign(dim_, 0);
    site_ = table_.intern(coords_.data());
    return site_;
  }

  SiteId move(std::size_t atom) {
    const std::int64_t* d = deltas_.data() + atom * dim_;
    for (std::size_t i = 0; i < dim_; ++i) coords_[i] = detail::checked_add(coords_[i], d[i]);
    site_ = table_.intern(coords_.data());
    return site_;
  }

  /// Site id of an arbitrary element; does not move the tracker.
  SiteId intern(const LatticePoint& p) {
    group_.require(p);
    return table_.intern(p.coords.data());
  }

  SiteId site() const { return site_; }
  std::size_t site_count() const { return table_.size(); }
  LatticePoint position() const { return {coords_}; }

  bool at_identity() const {
    for (auto c : coords_)
      if (c != 0) return false;
    return true;
  }

 private:
  Lattice group_;
  std::size_t dim_;
  detail::CoordinateTable table_;
  std::vector<std::int64_t> deltas_;
  std::vector<std::int64_t> coords_;
  SiteId site_ = 0;
};

template <>
class SiteTracker<FreeGroup> {
 public:
  explicit SiteTracker(const StepDistribution<FreeGroup>& dist)
      : group_(dist.group()), fan_(2 * static_cast<std::size_t>(dist.group().rank)) {
    for (const auto& a : dist.atoms()) atoms_.push_back(a.letters);
    reset();
  }

  SiteId reset() {
    parent_.assign(1, kNone);
    edge_.assign(1, 0);
    children_.assign(fan_, kNone);
    node_ = 0;
    return node_;
  }

  SiteId move(std::size_t atom) {
    for (auto l : atoms_[atom]) node_ = step(node_, l);
    return node_;
  }

  SiteId intern(const Word& w) {
    group_.require(w);
    SiteId n = 0;
    for (auto l : w.letters) n = child(n, l);
    return n;
  }

  SiteId site() const { return node_; }
  std::size_t site_count() const { return parent_.size(); }
  bool at_identity() const { return node_ == 0; }

  Word position() const {
    Word w;
    for (SiteId n = node_; n != 0; n = parent_[n]) w.letters.push_back(edge_[n]);
    std::reverse(w.letters.begin(), w.letters.end());
    return w;
  }

 private:
  static constexpr SiteId kNone = std::numeric_limits<SiteId>::max();

  std::size_t slot(std::int32_t l) const {
    return l > 0 ? static_cast<std::size_t>(l - 1) : fan_ / 2 + static_cast<std::size_t>(-l - 1);
  }

  SiteId step(SiteId n, std::int32_t l) {
    if (n != 0 && edge_[n] == -l) return parent_[n];
    return child(n, l);
  }

  SiteId child(SiteId n, std::int32_t l) {
    auto& c = children_[n * fan_ + slot(l)];
    if (c == kNone) {
      if (parent_.size() >= kNone) throw std::length_error("too many free-group sites");
      auto id = static_cast<SiteId>(parent_.size());
      parent_.push_back(n);
      edge_.push_back(l);
      children_.resize(children_.size() + fan_, kNone);
      // `c` may dangle after the resize above.
      children_[n * fan_ + slot(l)] = id;
      return id;
    }
    return c;
  }

  FreeGroup group_;
  std::size_t fan_;
  std::vector<std::vector<std::int32_t>> atoms_;
  std::vector<SiteId> parent_;
  std::vector<std::int32_t> edge_;
  std::vector<SiteId> children_;
  SiteId node_ = 0;
};

/// Lightweight position tracker answering only "is S_i = e?".
template <class Group>
class ReturnCursor;

template <>
class ReturnCursor<Lattice> {
 public:
  explicit ReturnCursor(const StepDistribution<Lattice>& dist) : dim_(static_cast<std::size_t>(dist.group().dim)) {
    for (const auto& a : dist.atoms()) deltas_.insert(deltas_.end(), a.coords.begin(), a.coords.end());
    reset();
  }

  void reset() {
    coords_.assign(dim_, 0);
    nonzero_ = 0;
  }

  void move(std::size_t atom) {
    const std::int64_t* d = deltas_.data() + atom * dim_;
    for (std::size_t i = 0; i < dim_; ++i) {
      if (d[i] == 0) continue;
      bool was_zero = coords_[i] == 0;
      coords_[i] = detail::checked_add(coords_[i], d[i]);
      nonzero_ += (was_zero ? 1 : 0) - (coords_[i] == 0 ? 1 : 0);
    }
  }

  bool at_identity() const { return nonzero_ == 0; }

 private:
  std::size_t dim_;
  std::vector<std::int64_t> deltas_;
  std::vector<std::int64_t> coords_;
  std::ptrdiff_t nonzero_ = 0;
};

template <>
class ReturnCursor<FreeGroup> {
 public:
  explicit ReturnCursor(const StepDistribution<FreeGroup>& dist) {
    for (const auto& a : dist.atoms()) atoms_.push_back(a.letters);
  }

  void reset() { word_.letters.clear(); }

  void move(std::size_t atom) {
    for (auto l : atoms_[atom]) FreeGroup::push_letter(word_, l);
  }

  bool at_identity() const { return word_.letters.empty(); }

 private:
  std::vector<std::vector<std::int32_t>> atoms_;
  Word word_;
};

}  // namespace lln
