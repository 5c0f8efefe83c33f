// Countable groups carrying the walk: integer lattices Z^d and free groups F_k.
//
// Each group type exposes the same value-level surface (identity, compose,
// inverse, contains, encode/decode). GroupDescriptor / GroupElement wrap the
// two kinds for runtime selection; the runtime free functions throw
// kind_error when an element does not belong to the descriptor.
#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace lln {

/// Element of the wrong group kind or shape handed to a group operation.
class kind_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct LatticePoint {
  std::vector<std::int64_t> coords;
  friend bool operator==(const LatticePoint&, const LatticePoint&) = default;
};

/// Reduced word over signed generator indices: +i is generator i (1-based),
/// -i its inverse. A letter is never followed by its own inverse.
struct Word {
  std::vector<std::int32_t> letters;
  friend bool operator==(const Word&, const Word&) = default;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}

inline std::uint64_t get_le(std::string_view bytes, std::size_t offset, int width) {
  std::uint64_t v = 0;
  for (int b = 0; b < width; ++b)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + b])) << (8 * b);
  return v;
}

inline std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("lattice coordinate overflow");
  return r;
}

}  // namespace detail

/// Z^d with componentwise addition.
struct Lattice {
  using element_type = LatticePoint;

  int dim = 1;

  explicit Lattice(int d = 1) : dim(d) {
    if (d < 1) throw std::invalid_argument("lattice dimension must be >= 1");
  }

  friend bool operator==(const Lattice&, const Lattice&) = default;

  element_type identity() const { return {std::vector<std::int64_t>(static_cast<std::size_t>(dim), 0)}; }

  bool contains(const element_type& a) const { return a.coords.size() == static_cast<std::size_t>(dim); }

  bool is_identity(const element_type& a) const {
    for (auto c : a.coords)
      if (c != 0) return false;
    return true;
  }

  element_type compose(const element_type& a, const element_type& b) const {
    require(a);
    require(b);
    element_type r = a;
    for (std::size_t i = 0; i < r.coords.size(); ++i) r.coords[i] = detail::checked_add(r.coords[i], b.coords[i]);
    return r;
  }

  /// In-place right multiplication, a <- a b.
  void compose_into(element_type& a, const element_type& b) const {
    for (std::size_t i = 0; i < a.coords.size(); ++i) a.coords[i] = detail::checked_add(a.coords[i], b.coords[i]);
  }

  element_type inverse(const element_type& a) const {
    require(a);
    element_type r = a;
    for (auto& c : r.coords) {
      if (c == INT64_MIN) throw std::overflow_error("lattice coordinate overflow");
      c = -c;
    }
    return r;
  }

  /// d little-endian two's-complement int64 values, coordinate order preserved.
  std::string encode(const element_type& a) const {
    require(a);
    std::string out;
    out.reserve(8 * a.coords.size());
    for (auto c : a.coords) detail::put_u64(out, static_cast<std::uint64_t>(c));
    return out;
  }

  element_type decode(std::string_view bytes) const {
    if (bytes.size() != 8 * static_cast<std::size_t>(dim)) throw kind_error("lattice encoding has wrong length");
    element_type r;
    r.coords.resize(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i)
      r.coords[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(detail::get_le(bytes, 8 * i, 8));
    return r;
  }

  void require(const element_type& a) const {
    if (!contains(a)) throw kind_error("lattice point dimension does not match Z^" + std::to_string(dim));
  }
};

/// Free group on `rank` generators, elements kept as reduced words.
struct FreeGroup {
  using element_type = Word;

  int rank = 2;

  explicit FreeGroup(int k = 2) : rank(k) {
    if (k < 2) throw std::invalid_argument("free group rank must be >= 2");
  }

  friend bool operator==(const FreeGroup&, const FreeGroup&) = default;

  element_type identity() const { return {}; }

  bool contains(const element_type& a) const {
    for (std::size_t i = 0; i < a.letters.size(); ++i) {
      auto l = a.letters[i];
      if (l == 0 || l > rank || l < -rank) return false;
      if (i > 0 && a.letters[i - 1] == -l) return false;
    }
    return true;
  }

  bool is_identity(const element_type& a) const { return a.letters.empty(); }

  /// Free reduction of an arbitrary letter sequence.
  static element_type reduce(const std::vector<std::int32_t>& letters) {
    element_type r;
    r.letters.reserve(letters.size());
    for (auto l : letters) push_letter(r, l);
    return r;
  }

  static void push_letter(element_type& w, std::int32_t l) {
    if (!w.letters.empty() && w.letters.back() == -l)
      w.letters.pop_back();
    else
      w.letters.push_back(l);
  }

  element_type compose(const element_type& a, const element_type& b) const {
    require(a);
    require(b);
    element_type r = a;
    compose_into(r, b);
    return r;
  }

  void compose_into(element_type& a, const element_type& b) const {
    for (auto l : b.letters) push_letter(a, l);
  }

  element_type inverse(const element_type& a) const {
    require(a);
    element_type r;
    r.letters.assign(a.letters.rbegin(), a.letters.rend());
    for (auto& l : r.letters) l = -l;
    return r;
  }

  /// u32 little-endian length, then one little-endian int32 per letter.
  std::string encode(const element_type& a) const {
    require(a);
    std::string out;
    out.reserve(4 + 4 * a.letters.size());
    detail::put_u32(out, static_cast<std::uint32_t>(a.letters.size()));
    for (auto l : a.letters) detail::put_u32(out, static_cast<std::uint32_t>(l));
    return out;
  }

  element_type decode(std::string_view bytes) const {
    if (bytes.size() < 4) throw kind_error("word encoding too short");
    auto len = detail::get_le(bytes, 0, 4);
    if (bytes.size() != 4 + 4 * len) throw kind_error("word encoding has wrong length");
    element_type r;
    r.letters.resize(len);
    for (std::size_t i = 0; i < len; ++i)
      r.letters[i] = static_cast<std::int32_t>(static_cast<std::uint32_t>(detail::get_le(bytes, 4 + 4 * i, 4)));
    require(r);
    return r;
  }

  void require(const element_type& a) const {
    if (!contains(a)) throw kind_error("word is not a reduced word of F_" + std::to_string(rank));
  }
};

using GroupDescriptor = std::variant<Lattice, FreeGroup>;
using GroupElement = std::variant<LatticePoint, Word>;

namespace detail {

template <class Group>
const typename Group::element_type& element_as(const GroupElement& a) {
  auto* p = std::get_if<typename Group::element_type>(&a);
  if (p == nullptr) throw kind_error("element kind does not match group descriptor");
  return *p;
}

}  // namespace detail

inline GroupElement identity(const GroupDescriptor& g) {
  return std::visit([](const auto& grp) -> GroupElement { return grp.identity(); }, g);
}

inline GroupElement compose(const GroupDescriptor& g, const GroupElement& a, const GroupElement& b) {
  return std::visit(
      [&](const auto& grp) -> GroupElement {
        using G = std::decay_t<decltype(grp)>;
        return grp.compose(detail::element_as<G>(a), detail::element_as<G>(b));
      },
      g);
}

inline GroupElement inverse(const GroupDescriptor& g, const GroupElement& a) {
  return std::visit(
      [&](const auto& grp) -> GroupElement {
        using G = std::decay_t<decltype(grp)>;
        return grp.inverse(detail::element_as<G>(a));
      },
      g);
}

inline std::string canonical_encode(const GroupDescriptor& g, const GroupElement& a) {
  return std::visit(
      [&](const auto& grp) {
        using G = std::decay_t<decltype(grp)>;
        return grp.encode(detail::element_as<G>(a));
      },
      g);
}

inline GroupElement canonical_decode(const GroupDescriptor& g, std::string_view bytes) {
  return std::visit([&](const auto& grp) -> GroupElement { return grp.decode(bytes); }, g);
}

// Literals: lattice points as "(1,0,-2)"; words as generator tokens where
// a..z are generators 1..26 and A..Z their inverses; "e" is the identity.

inline LatticePoint parse_lattice_literal(const Lattice& g, std::string_view text) {
  std::string s;
  for (char c : text)
    if (c != ' ' && c != '\t' && c != '(' && c != ')') s.push_back(c);
  LatticePoint p;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto comma = s.find(',', pos);
    auto tok = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (tok.empty()) throw std::invalid_argument("bad lattice literal '" + std::string(text) + "'");
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw std::invalid_argument("bad lattice literal '" + std::string(text) + "'");
    p.coords.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (!g.contains(p))
    throw std::invalid_argument("lattice literal '" + std::string(text) + "' has wrong dimension");
  return p;
}

inline Word parse_word_literal(const FreeGroup& g, std::string_view text) {
  std::vector<std::int32_t> letters;
  if (text == "e") return {};
  for (char c : text) {
    std::int32_t l = 0;
    if (c >= 'a' && c <= 'z') l = c - 'a' + 1;
    else if (c >= 'A' && c <= 'Z') l = -(c - 'A' + 1);
    else throw std::invalid_argument("bad generator token '" + std::string(1, c) + "'");
    if (l > g.rank || l < -g.rank)
      throw std::invalid_argument("generator '" + std::string(1, c) + "' exceeds rank " + std::to_string(g.rank));
    letters.push_back(l);
  }
  return FreeGroup::reduce(letters);
}

inline std::string format_element(const LatticePoint& p) {
  std::string s = "(";
  for (std::size_t i = 0; i < p.coords.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(p.coords[i]);
  }
  return s + ")";
}

inline std::string format_element(const Word& w) {
  if (w.letters.empty()) return "e";
  std::string s;
  for (auto l : w.letters) s.push_back(l > 0 ? static_cast<char>('a' + l - 1) : static_cast<char>('A' - l - 1));
  return s;
}

}  // namespace lln
