#include <cmath>

#include "crlab/stopping.hpp"
#include "doctest.h"

using namespace crlab;
using namespace crlab::stopping;

namespace {

double gamma_pdf(double x, int n, double scale) {
  return std::exp((n - 1) * std::log(x) - x / scale - std::lgamma(n) - n * std::log(scale));
}

ChannelEnsemble small_ensemble() {
  return ChannelEnsemble::make({0.2, 0.5, 0.7}, 0.05, Density1D::exponential(1.0));
}

}  // namespace

TEST_CASE("posterior follows Bayes rule") {
  auto model = SensingModel::energy_detector(10, 1.0, 2.0);
  for (double z : {0.3, 1.0, 2.5, 4.0}) {
    double lf = gamma_pdf(z, 10, 0.1);
    double lb = model.z_busy.pdf(z);
    double theta = 0.3;
    double ref = 0.7 * lb / (theta * lf + 0.7 * lb);
    CHECK(posterior_busy(model, theta, z) == doctest::Approx(ref).epsilon(1e-10));
    CHECK(model.z_free.pdf(z) == doctest::Approx(lf).epsilon(1e-10));
  }
  // A high statistic points at a busy channel.
  CHECK(posterior_busy(model, 0.5, 5.0) > posterior_busy(model, 0.5, 0.5));
}

TEST_CASE("perfect sensing gives certain posteriors") {
  auto model = SensingModel::perfect(0.0, 1.0);
  CHECK(posterior_busy(model, 0.4, 0.0) == 0.0);
  CHECK(posterior_busy(model, 0.4, 1.0) == 1.0);
  CHECK_THROWS(SensingModel::perfect(1.0, 1.0));
}

TEST_CASE("underlay power is water-filling with an inflated level") {
  CHECK(underlay_power(4.0, 0.5, 0.25, 0.5) == doctest::Approx(1.0 / 0.5 - 1.0 / 4.0));
  CHECK(underlay_power(4.0, 0.5, 0.25, 0.0) == doctest::Approx(4.0 - 0.25));
  CHECK(underlay_power(0.1, 0.5, 0.25, 1.0) == 0.0);
  CHECK_THROWS_AS(underlay_power(1.0, 0.0, 0.0, 0.5), DomainError);
}

TEST_CASE("interference budget is met with equality") {
  auto ens = small_ensemble();
  auto model = SensingModel::energy_detector(10, 1.0, 2.0);
  for (double i_avg : {0.2, 1.0}) {
    auto sol = solve_underlay(ens, model, i_avg, std::nullopt, kInf);
    CHECK(sol.interference_active);
    CHECK(sol.stats.avg_interference == doctest::Approx(i_avg).epsilon(1e-5));
    CHECK(sol.stats.throughput > 0.0);
  }
}

TEST_CASE("tighter interference budget lowers throughput") {
  auto ens = small_ensemble();
  auto model = SensingModel::energy_detector(10, 1.0, 2.0);
  auto lo = solve_underlay(ens, model, 0.2, 1.0, kInf);
  auto hi = solve_underlay(ens, model, 1.0, 1.0, kInf);
  CHECK(lo.stats.throughput <= hi.stats.throughput + 1e-9);
  CHECK(lo.stats.avg_power <= 1.0 * (1.0 + 1e-5));
  CHECK(hi.stats.avg_power <= 1.0 * (1.0 + 1e-5));
}

TEST_CASE("underlay monte carlo agrees with the recursion") {
  auto ens = small_ensemble();
  auto model = SensingModel::energy_detector(10, 1.0, 2.0);
  auto sol = solve_underlay(ens, model, 0.5, 2.0, kInf);
  auto mc = simulate_stopping(ens, sol.policy, 200000, 17);
  CHECK(std::abs(mc.mean.throughput - sol.stats.throughput) <= 4.0 * mc.std_error.throughput);
  CHECK(std::abs(mc.mean.avg_interference - sol.stats.avg_interference) <= 4.0 * mc.std_error.avg_interference);
  CHECK(std::abs(mc.mean.p_success - sol.stats.p_success) <= 4.0 * mc.std_error.p_success);
}
