#include <catch_amalgamated.hpp>

#include <cmath>

#include "lln/report.hpp"

using namespace lln;

namespace {

ExperimentConfig config(const std::string& text) { return parse_config_text(text); }

const StepDistribution<FreeGroup>& f2() {
  static const auto d = standard_srw(FreeGroup(2));
  return d;
}

}  // namespace

TEST_CASE("lln smoke run produces finite fields", "[experiments]") {
  auto cfg = config("steps = 100\nreplicas = 2\nfunctional = range; level:1; power:2\n");
  auto rep = run_lln(f2(), cfg);
  REQUIRE_FALSE(rep.rows.empty());
  for (const auto& r : rep.rows) {
    CHECK(std::isfinite(r.mean));
    CHECK(std::isfinite(r.variance));
    CHECK(std::isfinite(r.ci_halfwidth));
    CHECK(std::isfinite(r.theory_target));
    CHECK(r.replica_count == 2);
  }
  CHECK(rep.find("G_n(level:1)/n", 100)->theory_target == Catch::Approx(4.0 / 9).epsilon(1e-14));
  CHECK(rep.verdict("range_paths_agree"));
  CHECK(rep.summary["gamma"]["source"] == "exact");
  CHECK(rep.summary.contains("warning"));
}

TEST_CASE("lln refuses functionals without the summability guarantee", "[experiments]") {
  auto cfg = config("steps = 100\nreplicas = 2\nfunctional = geomhalf\n");
  CHECK_THROWS_AS(run_lln(f2(), cfg), condition_error);
  CHECK_THROWS_AS(run_l2(f2(), cfg), condition_error);
}

TEST_CASE("range estimator and range functional agree exactly", "[experiments][property]") {
  auto cfg = config("checkpoints = 100, 1000, 3000\nreplicas = 20\nfunctional = range\n");
  auto rep = run_lln(f2(), cfg);
  for (std::uint64_t n : {100, 1000, 3000})
    CHECK(rep.find("R_n/n", n)->mean == rep.find("G_n(range)/n", n)->mean);
  CHECK(rep.verdict("range_paths_agree"));
  // The max-deviation proxy is nonincreasing in n by construction.
  CHECK(rep.find("maxdev_after_n(range)", 100)->mean >= rep.find("maxdev_after_n(range)", 3000)->mean);
}

TEST_CASE("multirange on the deterministic walk is exact", "[experiments]") {
  auto cfg = config("group = lattice\ndim = 1\nsteps = 500\nreplicas = 3\ngamma = range\n[step_weights]\n(1) = 1\n");
  auto dist = make_distribution(Lattice(1), cfg.step_weights);
  auto rep = run_multirange(dist, cfg);
  CHECK(rep.summary["gamma"]["gamma"] == 1.0);
  CHECK(rep.find("R_n^(1)/n", 500)->mean == 1.0);
  CHECK(rep.find("R_n^(1)/n", 500)->theory_target == 1.0);
  for (int k = 2; k <= 5; ++k) {
    CHECK(rep.find("R_n^(" + std::to_string(k) + ")/n", 500)->mean == 0.0);
    CHECK(rep.find("R_n^(" + std::to_string(k) + ")/n", 500)->theory_target == 0.0);
  }
  CHECK(rep.passed());
}

TEST_CASE("multirange on F_2 tracks the geometric targets", "[experiments][statistical]") {
  auto cfg = config("steps = 20000\nreplicas = 30\nk_max = 3\n");
  auto rep = run_multirange(f2(), cfg);
  CHECK(rep.find("R_n^(3)/n", 20000)->theory_target == Catch::Approx(4.0 / 81).epsilon(1e-14));
  CHECK(rep.find("G_n(h^(1))/n", 20000)->mean == 1.0);
  CHECK(rep.passed());
}

TEST_CASE("l2 trend bookkeeping", "[experiments]") {
  auto single = run_l2(f2(), config("steps = 1000\nreplicas = 5\nfunctional = range\n"));
  CHECK(single.summary["functionals"]["range"]["trend"] == "insufficient data");
  CHECK(single.verdicts.empty());

  auto degenerate = run_l2(f2(), config("checkpoints = 100, 1000\nreplicas = 5\nfunctional = power:1\n"));
  CHECK(degenerate.summary["functionals"]["power:1"]["trend"] == "identically zero");

  auto range = run_l2(f2(), config("checkpoints = 1000, 10000, 50000\nreplicas = 40\nfunctional = range; power:2\n"));
  CHECK(range.verdict("second_moment_decreasing(range)"));
  CHECK(range.verdict("second_moment_decreasing(power:2)"));
  CHECK(range.find("sqdev(range)", 50000)->mean < range.find("sqdev(range)", 1000)->mean);
}

TEST_CASE("shift invariance trivial windows", "[experiments]") {
  auto one = run_shift_invariance(f2(), config("window = 1\noffsets = 0, 3, 50\nj_max = 3\nreplicas = 4\n"));
  for (std::uint64_t m : {0, 3, 50}) {
    const auto* r = one.find("G_{m,m+1}(h^(1))", m);
    REQUIRE(r != nullptr);
    CHECK(r->mean == 1.0);
    CHECK(r->variance == 0.0);
    CHECK(one.find("G_{m,m+1}(h^(2))", m)->mean == 0.0);
  }
  auto wide = run_shift_invariance(f2(), config("window = 500\noffsets = 0, 100, 1000\nj_max = 2\nreplicas = 300\n"));
  CHECK(wide.verdict("offset_means_agree"));
}

TEST_CASE("identity suite edge cases and groups", "[experiments]") {
  auto tiny = run_identity_suite(f2(), config("steps = 1\nreplicas = 2\n"));
  CHECK(tiny.passed());
  auto z3 = run_identity_suite(standard_srw(Lattice(3)), config("steps = 1000\nreplicas = 30\nj_max = 10\n"));
  CHECK(z3.passed());
  CHECK(z3.summary["first_failure"].is_null());
  auto fixed = run_identity_suite(f2(), config("steps = 800\nreplicas = 10\nsplits = 5, 400, 799, 900\n"));
  CHECK(fixed.passed());
}

TEST_CASE("counterexample harness structure", "[experiments]") {
  auto cfg = config(
      "functional = geomhalf\ncheckpoints = 256, 1024\nreplicas = 20\np_list = 2, 5\na_replicas = 4000\n"
      "a_horizon = 2000\n");
  auto rep = run_counterexample(f2(), cfg);
  CHECK(rep.verdict("l2_condition_fails"));
  CHECK(rep.verdict("l1_condition_holds"));
  CHECK(rep.verdict("bound_exceeds_vanishing_target"));
  CHECK(rep.verdict("control_shrinks_in_p"));
  CHECK(rep.summary["a"]["estimate"].get<double>() == Catch::Approx(3.0).margin(0.3));
  CHECK(rep.summary["lower_bound_discounted"].get<double>() ==
        Catch::Approx(rep.summary["lower_bound"].get<double>() / 2));
  CHECK(rep.find("tail_moment(geomhalf|p5)", 1024) != nullptr);
  CHECK(rep.find("tail_moment(power:1|p2)", 256) != nullptr);

  CHECK_THROWS_AS(run_counterexample(f2(), config("functional = range\n")), config_error);
  // Too few finite returns to stabilise a.
  CHECK_THROWS_AS(run_counterexample(f2(), config("functional = geomhalf\na_replicas = 20\n")), std::runtime_error);
}

TEST_CASE("gamma experiment reports every estimator", "[experiments]") {
  auto rep = run_gamma(f2(), config("steps = 2000\nreplicas = 20\ngamma_replicas = 5000\ngamma = escape:200\n"));
  CHECK(rep.summary["exact"]["gamma"] == 2.0 / 3);
  CHECK(rep.summary["resolved"]["source"] == "escape");
  CHECK(rep.passed());
  CHECK_THROWS_AS(run_gamma(standard_srw(Lattice(3)), config("steps = 100\ngamma = exact\n")), config_error);
}

TEST_CASE("reports are byte-identical across worker counts", "[experiments][reproducibility]") {
  auto cfg = config("checkpoints = 200, 2000\nreplicas = 12\nfunctional = range; power:1.5\n");
  auto a = run_lln(f2(), cfg, 1), b = run_lln(f2(), cfg, 4);
  CHECK(to_csv(a) == to_csv(b));
  CHECK(to_summary_text(a, cfg) == to_summary_text(b, cfg));

  auto ccfg = config("functional = geomhalf\ncheckpoints = 128, 512\nreplicas = 8\na_replicas = 6000\n");
  auto c = run_counterexample(f2(), ccfg, 1), d = run_counterexample(f2(), ccfg, 3);
  CHECK(to_csv(c) == to_csv(d));
  CHECK(to_summary_text(c, ccfg) == to_summary_text(d, ccfg));

  auto icfg = config("steps = 300\nreplicas = 9\n");
  CHECK(to_csv(run_identity_suite(f2(), icfg, 1)) == to_csv(run_identity_suite(f2(), icfg, 2)));
}
