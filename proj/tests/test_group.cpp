#include <catch_amalgamated.hpp>

#include <set>

#include "lln/group.hpp"
#include "lln/rng.hpp"

using namespace lln;

namespace {

Word random_word(const FreeGroup& g, StreamRng& rng, int max_len) {
  std::vector<std::int32_t> letters;
  auto len = rng.below(static_cast<std::uint64_t>(max_len) + 1);
  for (std::uint64_t i = 0; i < len; ++i) {
    auto l = static_cast<std::int32_t>(1 + rng.below(static_cast<std::uint64_t>(g.rank)));
    letters.push_back(rng.below(2) ? l : -l);
  }
  return FreeGroup::reduce(letters);
}

LatticePoint random_point(const Lattice& g, StreamRng& rng) {
  LatticePoint p = g.identity();
  for (auto& c : p.coords) c = static_cast<std::int64_t>(rng.below(201)) - 100;
  return p;
}

}  // namespace

TEST_CASE("lattice arithmetic", "[group]") {
  Lattice z2(2);
  auto a = parse_lattice_literal(z2, "(1,2)");
  auto b = parse_lattice_literal(z2, "(-3, 4)");
  CHECK(z2.compose(a, b).coords == std::vector<std::int64_t>{-2, 6});
  CHECK(z2.is_identity(z2.compose(a, z2.inverse(a))));
  CHECK(z2.compose(a, b) == z2.compose(b, a));
  CHECK(format_element(a) == "(1,2)");

  Lattice z1(1);
  auto one = parse_lattice_literal(z1, "(1)");
  CHECK(z1.compose(one, z1.inverse(one)) == z1.identity());

  CHECK_THROWS_AS(Lattice(0), std::invalid_argument);
  CHECK_THROWS_AS(parse_lattice_literal(z2, "(1,2,3)"), std::invalid_argument);
  CHECK_THROWS_AS(parse_lattice_literal(z2, "(1,x)"), std::invalid_argument);
  CHECK_THROWS_AS(z2.compose(a, LatticePoint{{1, 2, 3}}), kind_error);

  LatticePoint big{{INT64_MAX, 0}};
  CHECK_THROWS_AS(z2.compose(big, a), std::overflow_error);
}

TEST_CASE("free group reduction and inverses", "[group]") {
  FreeGroup f2(2);
  auto a = parse_word_literal(f2, "a");
  auto A = parse_word_literal(f2, "A");
  CHECK(f2.is_identity(f2.compose(a, A)));
  CHECK(parse_word_literal(f2, "abBA").letters.empty());
  CHECK(format_element(parse_word_literal(f2, "aabB")) == "aa");
  CHECK(format_element(f2.inverse(parse_word_literal(f2, "ab"))) == "BA");
  CHECK(format_element(f2.identity()) == "e");
  // Non-commutative.
  auto b = parse_word_literal(f2, "b");
  CHECK_FALSE(f2.compose(a, b) == f2.compose(b, a));

  CHECK_THROWS_AS(FreeGroup(1), std::invalid_argument);
  CHECK_THROWS_AS(parse_word_literal(f2, "c"), std::invalid_argument);
  CHECK_FALSE(f2.contains(Word{{1, -1}}));
  CHECK_THROWS_AS(f2.compose(Word{{1, -1}}, a), kind_error);
}

TEST_CASE("group axioms on random elements", "[group][property]") {
  StreamRng rng({42, 0});
  FreeGroup f3(3);
  Lattice z3(3);
  for (int t = 0; t < 500; ++t) {
    auto x = random_word(f3, rng, 8), y = random_word(f3, rng, 8), z = random_word(f3, rng, 8);
    CHECK(f3.compose(f3.compose(x, y), z) == f3.compose(x, f3.compose(y, z)));
    CHECK(f3.compose(x, f3.identity()) == x);
    CHECK(f3.is_identity(f3.compose(f3.inverse(x), x)));
    CHECK(f3.contains(f3.compose(x, y)));

    auto p = random_point(z3, rng), q = random_point(z3, rng), r = random_point(z3, rng);
    CHECK(z3.compose(z3.compose(p, q), r) == z3.compose(p, z3.compose(q, r)));
    CHECK(z3.is_identity(z3.compose(z3.inverse(p), p)));
  }
}

TEST_CASE("canonical encoding is injective and round-trips", "[group][property]") {
  StreamRng rng({43, 0});
  FreeGroup f2(2);
  Lattice z3(3);
  std::set<std::string> seen_words, seen_points;
  std::set<std::vector<std::int32_t>> distinct_words;
  std::set<std::vector<std::int64_t>> distinct_points;
  for (int t = 0; t < 2000; ++t) {
    auto w = random_word(f2, rng, 6);
    CHECK(f2.decode(f2.encode(w)) == w);
    seen_words.insert(f2.encode(w));
    distinct_words.insert(w.letters);
    auto p = random_point(z3, rng);
    CHECK(z3.decode(z3.encode(p)) == p);
    seen_points.insert(z3.encode(p));
    distinct_points.insert(p.coords);
  }
  CHECK(seen_words.size() == distinct_words.size());
  CHECK(seen_points.size() == distinct_points.size());

  // Golden bytes pin the layout.
  CHECK(z3.encode(LatticePoint{{1, -1, 0}}) ==
        std::string("\x01\0\0\0\0\0\0\0\xff\xff\xff\xff\xff\xff\xff\xff\0\0\0\0\0\0\0\0", 24));
  CHECK(f2.encode(parse_word_literal(f2, "aB")) == std::string("\x02\0\0\0\x01\0\0\0\xfe\xff\xff\xff", 12));
}

TEST_CASE("descriptor-level operations reject mismatched kinds", "[group]") {
  GroupDescriptor g = FreeGroup(2);
  GroupElement w = parse_word_literal(FreeGroup(2), "ab");
  GroupElement p = LatticePoint{{0, 0}};
  CHECK(std::get<Word>(compose(g, w, inverse(g, w))).letters.empty());
  CHECK_THROWS_AS(compose(g, w, p), kind_error);
  CHECK_THROWS_AS(canonical_encode(g, p), kind_error);
  CHECK(std::get<Word>(canonical_decode(g, canonical_encode(g, w))) == std::get<Word>(w));
  CHECK_THROWS_AS(canonical_decode(g, "xyz"), kind_error);
  CHECK_THROWS_AS(canonical_decode(GroupDescriptor{Lattice(2)}, std::string(8, '\0')), kind_error);
  CHECK(std::holds_alternative<LatticePoint>(identity(GroupDescriptor{Lattice(4)})));
}
