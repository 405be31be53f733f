#include <cmath>

#include "crlab/deadline.hpp"
#include "doctest.h"

using namespace crlab;
using namespace crlab::deadline;

namespace {

// Enumerates all 2^t_f success patterns.
double enumerate(int K, int t_f, double p) {
  double total = 0.0;
  for (unsigned m = 0; m < (1u << t_f); ++m) {
    int ones = __builtin_popcount(m);
    if (ones >= K) total += std::pow(p, ones) * std::pow(1.0 - p, t_f - ones);
  }
  return total;
}

}  // namespace

TEST_CASE("p_frame matches enumeration") {
  for (int t_f = 1; t_f <= 8; ++t_f)
    for (int K = 0; K <= t_f; ++K)
      for (double p : {0.0, 0.1, 0.5, 0.93, 1.0}) CHECK(std::abs(p_frame(K, t_f, p) - enumerate(K, t_f, p)) <= 1e-12);
  CHECK_THROWS(p_frame(5, 4, 0.5));
  CHECK_THROWS(p_frame(1, 4, 1.5));
}

TEST_CASE("required_p inverts p_frame") {
  for (double r : {0.5, 0.9, 0.95, 0.99}) {
    double p = required_p(2, 4, r);
    CHECK(p_frame(2, 4, p) >= r - 1e-12);
    CHECK(p_frame(2, 4, p - 1e-6) < r);
  }
  CHECK_THROWS(required_p(0, 4, 0.9));
}

TEST_CASE("online replanning tracks remaining packets") {
  auto plan = FramePlan::start(2, 4, 0.95);
  CHECK(plan.K_remaining == 2);
  CHECK(plan.slots_left() == 4);
  auto r1 = online_replan(plan, true);
  CHECK(r1.plan.K_remaining == 1);
  CHECK(r1.plan.slots_left() == 3);
  CHECK(r1.required_p == doctest::Approx(required_p(1, 3, 0.95)));
  auto r2 = online_replan(r1.plan, true);
  CHECK(r2.complete);
  auto f1 = online_replan(plan, false);
  auto f2 = online_replan(f1.plan, false);
  auto f3 = online_replan(f2.plan, false);
  CHECK(f3.failed);
  CHECK_THROWS(FramePlan::start(5, 4, 0.95));
}

TEST_CASE("frame simulation is reproducible and meets the target") {
  auto ens = stopping::ChannelEnsemble::linear(10, 0.05, 0.05, numerics::Density1D::exponential(1.0));
  FrameSimOptions opts;
  opts.frames = 20000;
  opts.seed = 4;
  auto a = simulate_frames_online(ens, opts);
  auto b = simulate_frames_online(ens, opts);
  CHECK(a.successes == b.successes);
  CHECK(a.throughput == b.throughput);
  CHECK(a.success_rate >= 0.95 - 3.0 * a.success_std_error);
  auto off = simulate_frames_offline(ens, opts);
  CHECK(off.frames == 20000);
  CHECK(off.success_rate >= 0.95 - 3.0 * off.success_std_error);
}

TEST_CASE("plan_policy reports unreachable targets") {
  auto ens = stopping::ChannelEnsemble::linear(10, 0.05, 0.05, numerics::Density1D::exponential(1.0));
  auto ok = plan_policy(ens, 10.0, 0.5, {});
  CHECK(ok.feasible);
  CHECK(ok.solution.stats.p_success >= 0.5 - 1e-9);
  auto bad = plan_policy(ens, 10.0, 0.999, {});
  CHECK_FALSE(bad.feasible);
}
