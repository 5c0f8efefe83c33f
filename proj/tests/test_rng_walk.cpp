#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "lln/sites.hpp"
#include "lln/walk.hpp"

using namespace lln;

TEST_CASE("philox4x64-10 known-answer vectors", "[rng]") {
  using P = Philox4x64;
  auto zero = P::block({0, 0, 0, 0}, {0, 0});
  CHECK(zero == P::counter_type{0x16554d9eca36314cULL, 0xdb20fe9d672d0fdcULL, 0xd7e772cee186176bULL,
                                0x7e68b68aec7ba23bULL});
  const auto m = ~0ULL;
  auto ones = P::block({m, m, m, m}, {m, m});
  CHECK(ones == P::counter_type{0x87b092c3013fe90bULL, 0x438c3c67be8d0224ULL, 0x9cc7d7c69cd777b6ULL,
                                0xa09caebf594f0ba0ULL});
  auto pi = P::block({0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL, 0xa4093822299f31d0ULL, 0x082efa98ec4e6c89ULL},
                     {0x452821e638d01377ULL, 0xbe5466cf34e90c6cULL});
  CHECK(pi == P::counter_type{0xa528f45403e61d95ULL, 0x38c72dbd566e9788ULL, 0xa5a1610e72fd18b5ULL,
                              0x57bd43b5e52b7fe6ULL});
  static_assert(P::block({0, 0, 0, 0}, {0, 0})[0] == 0x16554d9eca36314cULL);
}

TEST_CASE("streams are deterministic and separated by replica and lane", "[rng]") {
  StreamRng a({7, 3}), b({7, 3}), c({7, 4}), d({7, 3}, Lane::splits), e({8, 3});
  int same_c = 0, same_d = 0, same_e = 0;
  for (int i = 0; i < 1000; ++i) {
    auto x = a();
    CHECK(x == b());
    same_c += x == c();
    same_d += x == d();
    same_e += x == e();
  }
  CHECK(same_c == 0);
  CHECK(same_d == 0);
  CHECK(same_e == 0);
  CHECK(a.blocks_consumed() == 250);

  StreamRng u({1, 0});
  double mean = 0;
  for (int i = 0; i < 100000; ++i) {
    double x = u.uniform01();
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
    mean += x;
  }
  CHECK(std::fabs(mean / 100000 - 0.5) < 4 * std::sqrt(1.0 / 12 / 100000));
}

TEST_CASE("step distribution validation", "[walk]") {
  Lattice z1(1);
  FreeGroup f2(2);
  using V = std::vector<std::pair<std::string, double>>;
  CHECK_THROWS_AS(make_distribution(z1, V{{"(1)", -1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(make_distribution(z1, V{{"(1)", 1.0}, {"(1)", 2.0}}), std::invalid_argument);
  CHECK_THROWS_AS(make_distribution(z1, V{{"(0)", 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(make_distribution(f2, V{{"c", 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(make_distribution(f2, V{{"a", std::nan("")}}), std::invalid_argument);
  CHECK_THROWS_AS((StepDistribution<Lattice>(z1, {})), std::invalid_argument);
  // A lazy walk is fine.
  auto lazy = make_distribution(z1, V{{"(0)", 1.0}, {"(1)", 1.0}});
  CHECK(lazy.size() == 2);
  CHECK(standard_srw(f2).size() == 4);
  CHECK(standard_srw(Lattice(3)).size() == 6);
}

TEST_CASE("alias sampling frequencies match probabilities", "[walk][statistical]") {
  FreeGroup f2(2);
  auto dist = make_distribution(f2, {{"a", 1.0}, {"A", 3.0}, {"b", 0.5}, {"B", 2.5}});
  StreamRng rng({99, 0});
  const int n = 400000;
  std::vector<int> counts(dist.size(), 0);
  for (int i = 0; i < n; ++i) ++counts[dist.sample_index(rng)];
  for (std::size_t i = 0; i < dist.size(); ++i) {
    double p = dist.probabilities()[i];
    double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::fabs(counts[i] / double(n) - p) < 4.5 * se);
  }
  // Two-atom 1:3 law.
  auto two = make_distribution(Lattice(1), {{"(1)", 1.0}, {"(-1)", 3.0}});
  int plus = 0;
  for (int i = 0; i < n; ++i) plus += two.sample(rng).coords[0] == 1;
  CHECK(std::fabs(plus / double(n) - 0.25) < 4.5 * std::sqrt(0.25 * 0.75 / n));
}

TEST_CASE("walk positions are the fold of sampled increments", "[walk][property]") {
  FreeGroup f2(2);
  auto dist = standard_srw(f2);
  auto stream = walk(dist, 300, {5, 2});
  StreamRng shadow({5, 2});
  Word expect;
  while (stream.advance()) {
    f2.compose_into(expect, dist.sample(shadow));
    REQUIRE(stream.position() == expect);
    REQUIRE(stream.last_increment() == dist.atom(stream.last_atom()));
  }
  CHECK(stream.done());
  CHECK(stream.index() == 300);
  auto pos = collect_positions(dist, 300, {5, 2});
  CHECK(pos.size() == 301);
  CHECK(pos.front() == f2.identity());
  CHECK(pos.back() == expect);
  CHECK(collect_positions(dist, 300, {5, 3}) != pos);

  auto lattice = standard_srw(Lattice(2));
  auto lpos = collect_positions(lattice, 200, {5, 2});
  for (std::size_t i = 1; i < lpos.size(); ++i) {
    auto d = Lattice(2).compose(Lattice(2).inverse(lpos[i - 1]), lpos[i]);
    REQUIRE(std::abs(d.coords[0]) + std::abs(d.coords[1]) == 1);
  }
}

TEMPLATE_TEST_CASE("site ids agree with canonical encodings", "[sites][oracle]", Lattice, FreeGroup) {
  TestType g(3);
  auto dist = standard_srw(g);
  for (std::uint64_t r = 0; r < 20; ++r) {
    SiteTracker<TestType> sites(dist);
    ReturnCursor<TestType> cursor(dist);
    auto stream = walk(dist, 2000, {11, r});
    std::map<std::string, SiteId> by_key;
    by_key[g.encode(stream.position())] = sites.site();
    while (stream.advance()) {
      auto id = sites.move(stream.last_atom());
      cursor.move(stream.last_atom());
      REQUIRE(sites.position() == stream.position());
      REQUIRE(cursor.at_identity() == g.is_identity(stream.position()));
      REQUIRE(sites.at_identity() == g.is_identity(stream.position()));
      auto [it, fresh] = by_key.emplace(g.encode(stream.position()), id);
      REQUIRE(it->second == id);
      REQUIRE(sites.intern(stream.position()) == id);
    }
    CHECK(by_key.size() == sites.site_count());
  }
}
