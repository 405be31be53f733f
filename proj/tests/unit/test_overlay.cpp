#include <cmath>

#include "crlab/stopping.hpp"
#include "doctest.h"

using namespace crlab;
using namespace crlab::stopping;

namespace {

ChannelEnsemble preset_ensemble() { return ChannelEnsemble::linear(10, 0.05, 0.05, Density1D::exponential(1.0)); }

// Composite Simpson on [a, b] with n (even) panels.
template <class F>
double simpson(F f, double a, double b, int n = 20000) {
  double h = (b - a) / n, s = f(a) + f(b);
  for (int k = 1; k < n; ++k) s += f(a + k * h) * (k % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Backward recursion with brute-force quadrature for exponential gains.
TailValues oracle(const ChannelEnsemble& ens, const std::vector<double>& th, double lambda_p) {
  double mean = ens.gain.mean();
  TailValues nx;
  for (int i = ens.M() - 1; i >= 0; --i) {
    double a = th[i];
    auto pdf = [&](double g) { return std::exp(-g / mean) / mean; };
    double hi = a + 60.0 * mean;
    double prob = std::exp(-a / mean);
    double rate = simpson([&](double g) { return std::log(g / lambda_p) * pdf(g); }, a, hi);
    double pw = simpson([&](double g) { return (1.0 / lambda_p - 1.0 / g) * pdf(g); }, a, hi);
    double theta = ens.theta[i], c = ens.c(i);
    double q = theta * prob;
    TailValues cur;
    cur.U = theta * c * rate + (1.0 - q) * nx.U;
    cur.S = theta * c * pw + (1.0 - q) * nx.S;
    cur.p = q + (1.0 - q) * nx.p;
    nx = cur;
  }
  return nx;
}

}  // namespace

TEST_CASE("ensemble construction and validation") {
  auto ens = preset_ensemble();
  CHECK(ens.M() == 10);
  CHECK(ens.theta[0] == doctest::Approx(0.05));
  CHECK(ens.theta[9] == doctest::Approx(0.5));
  CHECK(ens.c(0) == doctest::Approx(0.95));
  CHECK(ens.c(9) == doctest::Approx(0.5));
  auto rev = ens.reversed();
  CHECK(rev.theta[0] == doctest::Approx(0.5));
  CHECK(rev.sum_theta_c() != doctest::Approx(ens.sum_theta_c()));
  CHECK_THROWS(ChannelEnsemble::make({0.5, 1.2}, 0.05, Density1D::exponential(1.0)));
  CHECK_THROWS(ChannelEnsemble::make({0.5, 0.2}, 0.6, Density1D::exponential(1.0)));
}

TEST_CASE("water-filling power") {
  CHECK(overlay_power(2.0, 0.5) == doctest::Approx(1.5));
  CHECK(overlay_power(1.0, 2.0) == 0.0);
  CHECK(overlay_power(100.0, 0.01, 5.0) == doctest::Approx(5.0));
}

TEST_CASE("recursion matches brute-force quadrature") {
  auto ens = preset_ensemble();
  for (double lp : {0.2, 0.6, 1.1}) {
    auto eval = evaluate_overlay(ens, lp, 0.0);
    TailValues ref = oracle(ens, eval.policy.gamma_th, lp);
    CHECK(eval.stats.throughput == doctest::Approx(ref.U).epsilon(1e-7));
    CHECK(eval.stats.avg_power == doctest::Approx(ref.S).epsilon(1e-7));
    CHECK(eval.stats.p_success == doctest::Approx(ref.p).epsilon(1e-9));
    RecursionOptions numeric;
    numeric.closed_form = false;
    auto q = overlay_recursions(ens, eval.policy, numeric);
    CHECK(q.throughput == doctest::Approx(ref.U).epsilon(1e-7));
  }
}

TEST_CASE("thresholds sit above the water level and solve the stage equation") {
  auto ens = preset_ensemble();
  auto eval = evaluate_overlay(ens, 0.4, 0.3);
  for (int i = 0; i < ens.M(); ++i) {
    const auto& nx = eval.tails[i + 1];
    double a = std::max(0.0, nx.U - 0.4 * nx.S - 0.3 * (1.0 - nx.p));
    double g = eval.policy.gamma_th[i];
    CHECK(g >= 0.4);
    CHECK(std::abs(threshold_residual(g, 0.4, a / ens.c(i))) <= 1e-9);
  }
  CHECK(eval.policy.gamma_th.back() == doctest::Approx(0.4));
}

TEST_CASE("floor rule stops at the first usable channel") {
  auto ens = preset_ensemble();
  auto eval = evaluate_overlay(ens, 0.5, 0.0, std::nullopt, {}, ThresholdRule::Floor);
  for (double g : eval.policy.gamma_th) CHECK(g == doctest::Approx(0.5));
}

TEST_CASE("power constraint is met with equality when active") {
  auto ens = preset_ensemble();
  for (double p_avg : {1.0, 4.0, 10.0}) {
    auto sol = solve_overlay(ens, p_avg, kInf);
    CHECK(sol.power_active);
    CHECK(sol.stats.avg_power == doctest::Approx(p_avg).epsilon(1e-6));
    CHECK(sol.policy.lambda_p <= lambda_p_upper(ens, p_avg));
  }
}

TEST_CASE("looser delay bound never hurts throughput") {
  auto ens = preset_ensemble();
  double prev = 0.0;
  for (double d : {1.1, 1.2, 1.5, kInf}) {
    auto sol = solve_overlay(ens, 10.0, d);
    CHECK(sol.stats.expected_delay() <= d * (1.0 + 1e-6));
    CHECK(sol.stats.throughput >= prev - 1e-9);
    prev = sol.stats.throughput;
  }
}

TEST_CASE("unreachable delay bound reports the best effort") {
  auto ens = preset_ensemble();
  try {
    solve_overlay(ens, 10.0, 1.02);
    FAIL("expected OverlayInfeasible");
  } catch (const OverlayInfeasible& e) {
    CHECK(e.best_achievable < 1.0 / 1.02);
    CHECK(e.best_effort.stats.p_success == doctest::Approx(e.best_achievable));
  }
  CHECK_THROWS_AS(solve_overlay(ens, 10.0, 0.5), DomainError);
}

TEST_CASE("no-OSR and K-of-M baselines") {
  auto ens = preset_ensemble();
  auto opt = solve_overlay(ens, 5.0, kInf);
  auto no = solve_no_osr(ens, 5.0);
  CHECK(no.stats.throughput <= opt.stats.throughput);
  CHECK(no.stats.p_success >= opt.stats.p_success);
  CHECK(no.stats.avg_power == doctest::Approx(5.0).epsilon(1e-6));
  auto km = k_out_of_m(ens, 5, 5.0);
  CHECK(km.K == 5);
  CHECK(km.channels.size() == 5u);
  CHECK(km.stats.avg_power <= 5.0 * (1.0 + 1e-6));
  CHECK_THROWS(k_out_of_m(ens, 11, 5.0));
}

TEST_CASE("capped power stays below the cap") {
  auto ens = preset_ensemble();
  OverlayOptions opts;
  opts.p_max = 3.0;
  auto sol = solve_overlay(ens, 2.0, kInf, opts);
  for (double g : {0.5, 2.0, 10.0, 100.0}) CHECK(sol.policy.power(g) <= 3.0 + 1e-12);
  CHECK(sol.stats.avg_power <= 2.0 * (1.0 + 1e-6));
}

TEST_CASE("monte carlo agrees with the recursion") {
  auto ens = preset_ensemble();
  auto sol = solve_overlay(ens, 10.0, kInf);
  auto mc = simulate_stopping(ens, sol.policy, 200000, 5);
  CHECK(std::abs(mc.mean.throughput - sol.stats.throughput) <= 4.0 * mc.std_error.throughput);
  CHECK(std::abs(mc.mean.p_success - sol.stats.p_success) <= 4.0 * mc.std_error.p_success);
  auto again = simulate_stopping(ens, sol.policy, 200000, 5);
  CHECK(again.mean.throughput == mc.mean.throughput);
}
