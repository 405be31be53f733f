#include <cmath>

#include "crlab/stopping.hpp"
#include "doctest.h"

using namespace crlab;
using namespace crlab::stopping;

TEST_CASE("max-gain density is gumbel") {
  auto d = max_gain_density(1.0);
  CHECK(d.kind() == Density1D::Kind::Gumbel);
  CHECK(d.cdf(1.0) == doctest::Approx(std::exp(-std::exp(-1.0))));
}

TEST_CASE("multi-SU solution divides availability among users") {
  auto ens = ChannelEnsemble::linear(10, 0.05, 0.05, Density1D::exponential(1.0));
  auto small = solve_multi_su(ens, 30, 10.0, kInf);
  auto large = solve_multi_su(ens, 300, 10.0, kInf);
  CHECK(small.L == 30);
  CHECK(small.small_L_warning == false);
  CHECK(small.solution.stats.throughput > large.solution.stats.throughput);
  CHECK(small.solution.stats.avg_power == doctest::Approx(10.0).epsilon(1e-6));
  // Thresholds collapse toward the water level as L grows.
  CHECK(large.max_gap <= small.max_gap + 1e-12);
  CHECK(small.gaps.size() == 10u);
  for (double g : small.gaps) CHECK(g >= -1e-12);
  CHECK(solve_multi_su(ens, 5, 1.0, kInf).small_L_warning);
  CHECK_THROWS_AS(solve_multi_su(ens, 0, 1.0, kInf), DomainError);
}

TEST_CASE("constrained multi-SU meets its delay bound") {
  auto ens = ChannelEnsemble::linear(10, 0.05, 0.05, Density1D::exponential(1.0));
  auto unc = solve_multi_su(ens, 30, 5.0, kInf);
  ChannelEnsemble shared = ens;
  shared.gain = max_gain_density(1.0);
  OverlayOptions opts;
  opts.rec.users = 30;
  double d_min = solve_no_osr(shared, 5.0, opts).stats.expected_delay();
  double d = 0.5 * (d_min + unc.solution.stats.expected_delay());
  REQUIRE(d < unc.solution.stats.expected_delay());
  auto con = solve_multi_su(ens, 30, 5.0, d);
  CHECK(con.solution.stats.expected_delay() <= d * (1.0 + 1e-6));
  CHECK(con.solution.stats.throughput <= unc.solution.stats.throughput + 1e-12);
}
