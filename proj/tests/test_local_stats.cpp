#include <catch_amalgamated.hpp>

#include <cmath>

#include "lln/local_stats.hpp"
#include "lln/walk.hpp"

using namespace lln;

namespace {

// Replays a walk into site ids and an accumulator carrying `fs`.
template <class Group>
std::pair<LocalTimes, std::vector<SiteId>> replay(const StepDistribution<Group>& dist, std::uint64_t n, RngSpec spec,
                                                  std::vector<LocalFunctional> fs = {}) {
  SiteTracker<Group> sites(dist);
  LocalTimes acc(std::move(fs));
  std::vector<SiteId> traj{sites.site()};
  acc.ingest(traj.back());
  StreamRng rng(spec);
  while (traj.size() < n) {
    traj.push_back(sites.move(dist.sample_index(rng)));
    acc.ingest(traj.back());
  }
  return {std::move(acc), std::move(traj)};
}

}  // namespace

TEST_CASE("hand-worked trajectory on Z", "[local_stats]") {
  // S = 0, 1, 0, 1, 2: local times {0:2, 1:2, 2:1}.
  Lattice z(1);
  auto dist = make_distribution(z, {{"(1)", 1.0}, {"(-1)", 1.0}});
  SiteTracker<Lattice> sites(dist);
  LocalTimes acc({LocalFunctional::range(), LocalFunctional::level(2), LocalFunctional::power(2),
                  LocalFunctional::h_shift(2)});
  std::vector<LatticePoint> path;
  for (int x : {0, 1, 0, 1, 2}) path.push_back(LatticePoint{{x}});
  for (const auto& p : path) acc.ingest(sites, p);
  CHECK(acc.n() == 5);
  CHECK(acc.range() == 3);
  CHECK(acc.histogram().count(1) == 1);
  CHECK(acc.histogram().count(2) == 2);
  CHECK(acc.sums()[0].value() == 3.0);
  CHECK(acc.sums()[1].value() == 2.0);
  CHECK(acc.sums()[2].value() == 9.0);
  CHECK(acc.sums()[3].value() == 2.0);
  CHECK(g_sum_direct(z, std::span<const LatticePoint>(path), LocalFunctional::power(2)) == 9.0);
  CHECK(g_window(z, std::span<const LatticePoint>(path), 1, 4, LocalFunctional::range()) == 2.0);
  CHECK_THROWS_AS(g_window(z, std::span<const LatticePoint>(path), 3, 3, LocalFunctional::range()),
                  std::out_of_range);
  CHECK_THROWS_AS(g_window(z, std::span<const LatticePoint>(path), 0, 6, LocalFunctional::range()),
                  std::out_of_range);

  auto snap = acc.snapshot();
  CHECK(snap.n == 5);
  CHECK(snap.histogram == std::vector<std::pair<std::uint64_t, std::uint64_t>>{{1, 1}, {2, 2}});
  CHECK(snap.g_values[2].first == "power:2");
}

TEST_CASE("single position and deterministic walk edge cases", "[local_stats]") {
  LocalTimes one({LocalFunctional::range()});
  one.ingest(0);
  CHECK(one.range() == 1);
  CHECK(one.histogram().count(1) == 1);
  auto rep = verify_identities(one, std::vector<SiteId>{0}, 5, {});
  CHECK(rep.all_passed());

  auto plus = make_distribution(Lattice(1), {{"(1)", 1.0}});
  auto [acc, traj] = replay(plus, 1000, {1, 0});
  CHECK(acc.range() == 1000);
  CHECK(acc.histogram().count(1) == 1000);
  CHECK(acc.histogram().max_multiplicity() == 1);
}

TEST_CASE("histogram spills above the dense block", "[local_stats]") {
  LocalTimes acc({LocalFunctional::power(1), LocalFunctional::level(100)});
  for (int i = 0; i < 150; ++i) acc.ingest(0);
  for (int i = 0; i < 100; ++i) acc.ingest(1);
  CHECK(acc.histogram().count(150) == 1);
  CHECK(acc.histogram().count(100) == 1);
  CHECK(acc.histogram().max_multiplicity() == 150);
  CHECK(acc.sums()[0].value() == 250.0);
  CHECK(acc.sums()[1].value() == 1.0);
  CHECK(acc.histogram().weight() == 250);
}

namespace {

template <class Group>
void check_oracle(const Group& g, std::uint64_t trajectories, std::uint64_t max_n) {
  auto dist = standard_srw(g);
  const std::vector<LocalFunctional> fs{LocalFunctional::range(), LocalFunctional::level(2),
                                        LocalFunctional::power(2), LocalFunctional::h_shift(3),
                                        LocalFunctional::power(0.5)};
  StreamRng lengths({77, 0}, Lane::auxiliary);
  for (std::uint64_t r = 0; r < trajectories; ++r) {
    const std::uint64_t n = 1 + lengths.below(max_n);
    auto positions = collect_positions(dist, n - 1, {77, r});
    auto [acc, traj] = replay(dist, n, {77, r}, fs);
    REQUIRE(acc.n() == n);
    for (std::size_t i = 0; i < fs.size(); ++i) {
      double direct = g_sum_direct(g, std::span<const typename Group::element_type>(positions), fs[i]);
      if (fs[i].integer_valued())
        REQUIRE(acc.sums()[i].value() == direct);
      else
        REQUIRE(std::fabs(acc.sums()[i].value() - direct) <= 1e-9 * std::fabs(direct));
      REQUIRE(g_from_histogram(acc.histogram(), fs[i]) == Catch::Approx(direct).epsilon(1e-12));
    }
  }
}

}  // namespace

TEST_CASE("incremental sums equal the direct oracle", "[local_stats][oracle]") {
  check_oracle(Lattice(3), 100, 2000);
  check_oracle(FreeGroup(2), 100, 2000);
  check_oracle(Lattice(1), 50, 2000);
}

TEST_CASE("descriptor-level direct sum agrees with the typed one", "[local_stats][oracle]") {
  GroupDescriptor g = FreeGroup(2);
  auto dist = standard_srw(FreeGroup(2));
  auto typed = collect_positions(dist, 500, {3, 1});
  std::vector<GroupElement> erased(typed.begin(), typed.end());
  CHECK(g_sum_direct(g, std::span<const GroupElement>(erased), LocalFunctional::power(2)) ==
        g_sum_direct(FreeGroup(2), std::span<const Word>(typed), LocalFunctional::power(2)));
}

TEMPLATE_TEST_CASE("exact identities hold on random trajectories", "[local_stats][property]", Lattice, FreeGroup) {
  TestType g(std::is_same_v<TestType, Lattice> ? 3 : 2);
  auto dist = standard_srw(g);
  for (std::uint64_t r = 0; r < 50; ++r) {
    auto [acc, traj] = replay(dist, 1000, {9, r});
    std::vector<std::uint64_t> splits{1, 250, 500, 750, 999};
    auto rep = verify_identities(acc, traj, 10, splits);
    INFO(r);
    REQUIRE(rep.all_passed());
    CHECK(rep.evaluated == 2 + 2 * 10 + 5 * 10);
  }
}

TEST_CASE("identity verification rejects bad inputs and catches corruption", "[local_stats]") {
  auto dist = standard_srw(FreeGroup(2));
  auto [acc, traj] = replay(dist, 100, {1, 1});
  CHECK_THROWS_AS(verify_identities(acc, std::span<const SiteId>(traj).first(99), 3, {}), std::invalid_argument);
  std::vector<std::uint64_t> bad{0};
  CHECK_THROWS_AS(verify_identities(acc, traj, 3, bad), std::out_of_range);
  std::vector<std::uint64_t> outside{100};
  CHECK_THROWS_AS(verify_identities(acc, traj, 3, outside), std::out_of_range);

  // Accumulator and trajectory disagree: the split check sees the mismatch.
  LocalTimes distinct;
  for (SiteId i = 0; i < 100; ++i) distinct.ingest(i);
  std::vector<SiteId> stuck(100, 0);
  auto rep = verify_identities(distinct, stuck, 3, std::vector<std::uint64_t>{50});
  CHECK_FALSE(rep.all_passed());
  CHECK(rep.failed > 0);
}

TEST_CASE("h^(j) sums are monotone in j and vanish beyond the window", "[local_stats][property]") {
  auto dist = standard_srw(FreeGroup(2));
  auto [acc, traj] = replay(dist, 3000, {4, 0});
  double prev = acc.n() + 1.0;
  for (std::uint64_t j = 1; j <= 8; ++j) {
    double v = g_from_histogram(acc.histogram(), LocalFunctional::h_shift(j));
    CHECK(v <= prev);
    prev = v;
  }
  CHECK(g_from_histogram(acc.histogram(), LocalFunctional::h_shift(1)) == 3000.0);
  for (std::uint64_t m : {0, 17, 2000}) {
    CHECK(g_window(traj, m, m + 1, LocalFunctional::h_shift(1)) == 1.0);
    CHECK(g_window(traj, m, m + 5, LocalFunctional::h_shift(6)) == 0.0);
  }
}

TEST_CASE("tail of G_n splits as the finite-support truncation plus the rest", "[local_stats][property]") {
  auto dist = standard_srw(FreeGroup(2));
  auto f = LocalFunctional::power(1.5);
  auto [acc, traj] = replay(dist, 5000, {6, 0}, {f, truncate(f, 3)});
  double tail = 0;
  acc.histogram().for_each([&](std::uint64_t k, std::uint64_t c) {
    if (k > 3) tail += f(k) * static_cast<double>(c);
  });
  CHECK(acc.sums()[0].value() - acc.sums()[1].value() == Catch::Approx(tail).epsilon(1e-12));
}

TEST_CASE("compensated summation", "[local_stats]") {
  CompensatedSum s;
  s.add(1e16);
  for (int i = 0; i < 1000; ++i) s.add(1.0);
  s.add(-1e16);
  CHECK(s.value() == 1000.0);
}
