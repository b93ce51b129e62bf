#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "ldlc/lattice.hpp"
#include "ldlc/sim.hpp"

using namespace ldlc;

TEST_SUITE_BEGIN("sim");

TEST_CASE("noise variance from the capacity distance") {
  CHECK(kCapacityVariance == doctest::Approx(0.05854983152431916).epsilon(1e-15));
  CHECK(sigma2_from_db(0.0) == kCapacityVariance);
  CHECK(sigma2_from_db(10.0) == doctest::Approx(kCapacityVariance / 10.0).epsilon(1e-14));
  CHECK(sigma2_from_db(3.0) < sigma2_from_db(2.0));
}

TEST_CASE("uncoded integer-lattice symbol error rate") {
  // sigma = 1/4 puts the decision boundary at 2 sigma: 2 Q(2)
  CHECK(uncoded_ser(0.0625) == doctest::Approx(0.045500263896358414).epsilon(1e-14));
  // at the capacity threshold itself
  CHECK(uncoded_ser(kCapacityVariance) ==
        doctest::Approx(0.038793964259275408).epsilon(1e-14));
  CHECK(uncoded_ser(1e-4) < uncoded_ser(1e-2));
}

TEST_CASE("wilson interval properties") {
  const auto [lo0, hi0] = wilson_interval(0, 100);
  CHECK(lo0 == 0.0);
  CHECK(hi0 > 0.0);
  CHECK(hi0 < 0.05);

  const auto [loN, hiN] = wilson_interval(100, 100);
  CHECK(hiN == doctest::Approx(1.0));
  CHECK(loN < 1.0);

  const auto [lo, hi] = wilson_interval(10, 100);
  CHECK(lo < 0.1);
  CHECK(hi > 0.1);
  // tightens with more data at the same rate
  const auto [lo2, hi2] = wilson_interval(100, 1000);
  CHECK(hi2 - lo2 < hi - lo);
}

TEST_CASE("a point run is deterministic and thread-count independent") {
  const MagicSquareH h = generate(8, 3, 5);
  DecoderParams params;
  params.max_iterations = 25;

  std::vector<TrialRecord> rec1, rec2, rec4;
  PointOptions o1;
  o1.threads = 1;
  o1.records = &rec1;
  PointOptions o2 = o1;
  o2.records = &rec2;
  PointOptions o4;
  o4.threads = 4;
  o4.records = &rec4;

  const PointSummary s1 = run_point(h, 3.0, 24, params, 77, o1);
  const PointSummary s2 = run_point(h, 3.0, 24, params, 77, o2);
  const PointSummary s4 = run_point(h, 3.0, 24, params, 77, o4);

  CHECK(s1.symbol_errors == s2.symbol_errors);
  CHECK(s1.symbol_errors == s4.symbol_errors);
  CHECK(s1.ser == s4.ser);
  CHECK(s1.mean_iterations == s4.mean_iterations);
  REQUIRE(rec1.size() == 24);
  REQUIRE(rec4.size() == 24);
  for (std::size_t i = 0; i < rec1.size(); ++i) {
    CHECK(rec1[i].symbol_errors == rec4[i].symbol_errors);
    CHECK(rec1[i].iterations == rec4[i].iterations);
    CHECK(rec1[i].converged == rec4[i].converged);
    CHECK(rec2[i].symbol_errors == rec1[i].symbol_errors);
  }

}

TEST_CASE("far below threshold every trial decodes cleanly") {
  const MagicSquareH h = generate(8, 3, 6);
  const PointSummary s = run_point(h, 15.0, 30, DecoderParams{}, 3);
  CHECK(s.symbol_errors == 0);
  CHECK(s.ser == 0.0);
  CHECK(s.decode_failures == 0);
  CHECK(s.ci_low == 0.0);
  CHECK(s.trials == 30);
  CHECK(s.uncoded == doctest::Approx(uncoded_ser(s.sigma2)));
}

TEST_CASE("random transmitted points decode as well as zeros at high dB") {
  const MagicSquareH h = generate(8, 3, 6);
  PointOptions opt;
  opt.random_b = true;
  opt.random_b_radius = 2;
  std::vector<TrialRecord> recs;
  opt.records = &recs;
  const PointSummary s = run_point(h, 12.0, 20, DecoderParams{}, 9, opt);
  CHECK(s.symbol_errors == 0);
  REQUIRE(recs.size() == 20);
}

TEST_CASE("sweep runs the configured points in order") {
  SimConfig cfg;
  cfg.n = 8;
  cfg.d = 3;
  cfg.db_distances = {14.0, 10.0};
  cfg.trials_per_point = 10;
  cfg.seed = 21;
  const auto points = sweep(cfg);
  REQUIRE(points.size() == 2);
  CHECK(points[0].db == 14.0);
  CHECK(points[1].db == 10.0);
  CHECK(points[0].sigma2 < points[1].sigma2);
  CHECK(points[0].symbol_errors == 0);

  // a supplied matrix must match the configured dimensions
  const MagicSquareH h = generate(6, 3, 2);
  CHECK_THROWS_AS(sweep(cfg, &h), Error);
}

TEST_CASE("sweep validates its configuration") {
  SimConfig bad;
  bad.n = 8;
  bad.d = 3;
  bad.db_distances = {};
  CHECK_THROWS_AS(sweep(bad), Error);
  SimConfig neg;
  neg.n = 8;
  neg.d = 3;
  neg.db_distances = {3.0};
  neg.trials_per_point = 0;
  CHECK_THROWS_AS(sweep(neg), Error);
}

TEST_CASE("csv output is stable and parseable") {
  PointSummary p;
  p.db = 2.5;
  p.sigma2 = 0.033;
  p.trials = 100;
  p.symbol_errors = 7;
  p.ser = 0.00875;
  p.ci_low = 0.001;
  p.ci_high = 0.02;
  p.mean_iterations = 12.25;
  p.uncoded = 0.1;
  std::stringstream ss;
  write_csv(ss, {p});
  std::string header;
  std::getline(ss, header);
  CHECK(header ==
        "db,sigma2,trials,symbol_errors,ser,ci_low,ci_high,mean_iters,uncoded_ser");
  std::string row;
  std::getline(ss, row);
  CHECK(row.substr(0, 4) == "2.5,");
  CHECK(row.find(",100,7,") != std::string::npos);
}

TEST_SUITE_END();
