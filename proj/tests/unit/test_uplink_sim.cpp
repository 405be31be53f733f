#include <cmath>
#include <deque>
#include <sstream>

#include "crlab/csv.hpp"
#include "crlab/uplink_sim.hpp"
#include "doctest.h"

using namespace crlab;
using namespace crlab::sim;

namespace {

sched::FleetConfig fleet(double lambda, std::optional<double> i_avg = std::nullopt) {
  sched::FleetConfig f;
  sched::SuProfile a, b;
  a.lambda = b.lambda = lambda;
  a.gain = numerics::Density1D::exponential(2.0);
  a.interference = numerics::Density1D::exponential(0.4);
  b.gain = numerics::Density1D::exponential(4.0);
  b.interference = numerics::Density1D::exponential(0.2);
  f.sus = {a, b};
  f.r_max = 82.0;
  f.i_avg = i_avg;
  return f;
}

}  // namespace

TEST_CASE("packets are conserved and delays replay from the slot log") {
  for (Policy p : {Policy::DOIC, Policy::DOAC, Policy::SUBOPT, Policy::CSMA}) {
    SimOptions o;
    o.policy = p;
    o.horizon = 50000;
    o.seed = 9;
    o.record_slots = true;
    auto tr = run_sim(fleet(0.002, 25.0), o);
    REQUIRE(tr.slots.size() == 50000u);
    for (int i = 0; i < tr.N; ++i) {
      const auto& s = tr.sus[i];
      CHECK(s.arrivals == s.completed + s.in_flight);
      // FIFO replay of arrival and completion indicators.
      std::deque<long long> q;
      double w = 0.0;
      long long served_slots = 0;
      for (long long t = 1; t <= tr.horizon; ++t) {
        std::size_t k = (t - 1) * tr.N + i;
        CHECK(tr.queue_start[k] == static_cast<int>(q.size()));
        if (tr.arrived[k]) q.push_back(t);
        if (tr.served[k]) {
          w += static_cast<double>(t - q.front() + 1);
          q.pop_front();
        }
        if (tr.slots[t - 1].su == i) ++served_slots;
      }
      CHECK(w == doctest::Approx(s.delay_sum).epsilon(1e-12));
      CHECK(static_cast<long long>(q.size()) == s.in_flight);
      CHECK(s.empirical_rho == doctest::Approx(static_cast<double>(served_slots) / tr.horizon));
    }
  }
}

TEST_CASE("instantaneous interference is never exceeded") {
  for (Policy p : {Policy::DOIC, Policy::DOAC}) {
    SimOptions o;
    o.policy = p;
    o.horizon = 100000;
    o.csi_alpha = 0.5;
    auto tr = run_sim(fleet(0.003, 25.0), o);
    CHECK(tr.interference_violations == 0);
    CHECK(tr.max_slot_interference <= 50.0 * (1.0 + 1e-12));
  }
}

TEST_CASE("runs are reproducible") {
  SimOptions o;
  o.policy = Policy::DOAC;
  o.horizon = 30000;
  o.seed = 77;
  auto a = run_sim(fleet(0.002, 25.0), o);
  auto b = run_sim(fleet(0.002, 25.0), o);
  CHECK(a.sus[0].delay_sum == b.sus[0].delay_sum);
  CHECK(a.interference_energy == b.interference_energy);
  o.seed = 78;
  auto c = run_sim(fleet(0.002, 25.0), o);
  CHECK(c.interference_energy != a.interference_energy);
}

TEST_CASE("arrival streams do not depend on the policy") {
  SimOptions o;
  o.horizon = 20000;
  o.policy = Policy::DOIC;
  auto a = run_sim(fleet(0.002), o);
  o.policy = Policy::CSMA;
  auto b = run_sim(fleet(0.002), o);
  CHECK(a.sus[0].arrivals == b.sus[0].arrivals);
  CHECK(a.sus[1].arrivals == b.sus[1].arrivals);
}

TEST_CASE("frames tile the horizon") {
  SimOptions o;
  o.policy = Policy::DOIC;
  o.horizon = 40000;
  auto tr = run_sim(fleet(0.002), o);
  long long total = 0;
  for (const auto& f : tr.frames) {
    total += f.T;
    CHECK(f.T == f.idle + f.busy);
  }
  CHECK(total == tr.horizon);
  CHECK(tr.frames.back().closed == false);
  CHECK(static_cast<long long>(tr.frames.size()) == tr.frames_closed + 1);
}

TEST_CASE("max_frames stops early") {
  SimOptions o;
  o.horizon = 1000000;
  o.max_frames = 5;
  auto tr = run_sim(fleet(0.002), o);
  CHECK(tr.frames_closed == 5);
  CHECK(tr.horizon < 1000000);
  auto diag = mean_rate_diagnostic(tr);
  CHECK(diag.K == 5);
}

TEST_CASE("measurements and diagnostics") {
  SimOptions o;
  o.horizon = 100;
  auto empty = run_sim(fleet(1e-9), o);
  CHECK_THROWS_AS(measure_delays(empty), DomainError);
  CHECK(measure_interference(empty) == 0.0);
  CHECK_THROWS_AS(parse_policy("FIFO"), ConfigError);
  CHECK(parse_policy("SUBOPT") == Policy::SUBOPT);
  o.horizon = 0;
  CHECK_THROWS_AS(run_sim(fleet(0.001), o), DomainError);
}

TEST_CASE("trace CSVs have fixed columns") {
  SimOptions o;
  o.horizon = 5000;
  o.record_slots = true;
  auto tr = run_sim(fleet(0.002), o);
  std::ostringstream s, f;
  write_slots_csv(tr, s);
  write_frames_csv(tr, f);
  auto rows = csv::parse(s.str());
  REQUIRE(rows.size() == 5001u);
  CHECK(rows[0] == std::vector<std::string>{"slot", "su", "power", "g", "gamma", "bits", "interference"});
  auto frows = csv::parse(f.str());
  REQUIRE(frows.size() == tr.frames.size() + 1);
  CHECK(frows[0][0] == "frame");
  CHECK(frows[0].back() == "P_2");
}
