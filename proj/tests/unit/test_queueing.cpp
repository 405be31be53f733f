#include <cmath>

#include "crlab/sched.hpp"
#include "doctest.h"

using namespace crlab;
using namespace crlab::sched;

namespace {

FleetConfig table_fleet(double lambda) {
  FleetConfig f;
  SuProfile a, b;
  a.lambda = b.lambda = lambda;
  a.gain = Density1D::exponential(2.0);
  a.interference = Density1D::exponential(0.4);
  b.gain = Density1D::exponential(4.0);
  b.interference = Density1D::exponential(0.2);
  f.sus = {a, b};
  f.r_max = 82.0;
  return f;
}

// Monte Carlo estimate of mu with its standard error.
std::pair<double, double> mu_mc(const SuProfile& su, double P, double i_inst, std::optional<double> r_max, int n) {
  Rng rng(77);
  double s = 0.0, s2 = 0.0;
  for (int k = 0; k < n; ++k) {
    double gamma = su.gain.sample(rng), g = su.interference.sample(rng);
    double x = std::log2(1.0 + std::min(i_inst / g, P) * gamma);
    if (r_max) x = std::min(x, *r_max);
    x /= su.L;
    s += x;
    s2 += x * x;
  }
  double m = s / n;
  return {m, std::sqrt((s2 / n - m * m) / n)};
}

}  // namespace

TEST_CASE("effective rate caps power by the interference limit") {
  CHECK(effective_rate(10.0, 0.0, 1.0, 50.0) == doctest::Approx(std::log2(11.0)));
  CHECK(effective_rate(100.0, 1.0, 1.0, 50.0) == doctest::Approx(std::log2(51.0)));
  CHECK(effective_rate(1e9, 1e-9, 1e9, 1e9, 40.0) == 40.0);
}

TEST_CASE("mu matches monte carlo") {
  auto fleet = table_fleet(0.001);
  for (double P : {0.5, 10.0, 100.0}) {
    auto [m, se] = mu_mc(fleet.sus[0], P, fleet.i_inst, fleet.r_max, 400000);
    double mu = mu_of_power(fleet.sus[0], P, fleet.i_inst, fleet.r_max);
    CHECK(std::abs(mu - m) <= 4.0 * se);
  }
  CHECK(mu_of_power(fleet.sus[0], 100.0, 50.0, 82.0) == doctest::Approx(0.0066483).epsilon(1e-4));
  CHECK(mu_of_power(fleet.sus[1], 100.0, 50.0, 82.0) == doctest::Approx(0.0077989).epsilon(1e-4));
}

TEST_CASE("mu curve interpolates the exact rate") {
  auto fleet = table_fleet(0.001);
  MuCurve curve(fleet.sus[1], fleet.p_max, fleet.i_inst, fleet.r_max);
  for (double P : {0.013, 0.7, 3.3, 42.0, 100.0}) {
    double exact = mu_of_power(fleet.sus[1], P, fleet.i_inst, fleet.r_max);
    CHECK(curve(P) == doctest::Approx(exact).epsilon(1e-5));
  }
  // Monotone in P.
  double prev = 0.0;
  for (double P = 0.01; P <= 100.0; P *= 1.3) {
    CHECK(curve(P) >= prev);
    prev = curve(P);
  }
}

TEST_CASE("service-time moments") {
  auto m = service_moments(0.5, 10);
  CHECK(m.mean == doctest::Approx(20.0));
  double var = 10.0 * 0.5 / 0.25;
  CHECK(m.second_moment == doctest::Approx(var + 400.0));
  CHECK(m.second_moment <= m.lemma_bound + 1e-9);
  auto one = service_moments(1.0, 7);
  CHECK(one.mean == 7.0);
  CHECK(one.second_moment == 49.0);
  CHECK_THROWS_AS(service_moments(0.0, 3), DomainError);
}

TEST_CASE("queueing constants for the table preset") {
  auto c = QueueingConstants::build(table_fleet(0.001));
  CHECK(c.stable);
  CHECK(c.admission_scale == 1.0);
  double load = c.rho(0, c.p_max) + c.rho(1, c.p_max);
  CHECK(load == doctest::Approx(0.279).epsilon(2e-3));
  REQUIRE(c.P_min_global);
  // P_min keeps each SU's own load below one.
  for (int i = 0; i < 2; ++i) {
    CHECK(c.rho(i, c.P_min[i]) < 1.0);
    CHECK(c.P_min[i] <= c.p_max);
  }
  double global = c.rho(0, *c.P_min_global) + c.rho(1, *c.P_min_global);
  CHECK(global < 1.0);
  CHECK(stability_check(c).stable);
  CHECK(stability_check(c).load == doctest::Approx(load));
  CHECK(c.T_R == doctest::Approx(residual_bound(c.lambda, c.p_nonzero, c.L)));
}

TEST_CASE("admission control scales overloaded fleets") {
  auto fleet = table_fleet(0.005);
  fleet.admission_control = true;
  auto c = QueueingConstants::build(fleet);
  CHECK(c.admission_scale < 1.0);
  CHECK(stability_check(c).load == doctest::Approx(1.0 - fleet.epsilon).epsilon(1e-9));
  fleet.admission_control = false;
  auto raw = QueueingConstants::build(fleet);
  CHECK_FALSE(raw.stable);
  CHECK_FALSE(raw.P_min_global);
}

TEST_CASE("waiting-time bound grows with higher-priority load") {
  auto c = QueueingConstants::build(table_fleet(0.002));
  double a = w_up(c.p_max, 0.0, c, 0);
  double b = w_up(c.p_max, 0.3, c, 0);
  CHECK(b > a);
  CHECK_THROWS_AS(w_up(c.p_max, 0.99, c, 0), SaturationError);
  auto t = psi_terms(2.0, 3.0, 50.0, 0.1, c, 1);
  CHECK(t.psi == doctest::Approx(t.psi_d + t.psi_i));
  CHECK(t.psi_i == doctest::Approx(3.0 * c.rho(1, 50.0) * 50.0));
}

TEST_CASE("best power searches between P_min and P_max") {
  auto c = QueueingConstants::build(table_fleet(0.002));
  auto flat = best_power(0.0, 0.0, 0.0, c, 0);
  CHECK(flat.P == c.p_max);
  auto delay_only = best_power(5.0, 0.0, 0.0, c, 0);
  CHECK(delay_only.P == doctest::Approx(c.p_max).epsilon(1e-3));
  auto costly = best_power(1.0, 1e3, 0.0, c, 0);
  CHECK(costly.P < delay_only.P);
  CHECK(costly.P >= c.P_min[0]);
}
