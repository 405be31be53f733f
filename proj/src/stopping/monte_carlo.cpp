#include <cmath>

#include "crlab/stopping.hpp"

namespace crlab::stopping {

namespace {

struct Accumulator {
  double sum = 0.0, sum_sq = 0.0;
  void add(double x) {
    sum += x;
    sum_sq += x * x;
  }
  double mean(long long n) const { return sum / n; }
  double std_error(long long n) const {
    double m = mean(n);
    double var = std::max(0.0, sum_sq / n - m * m) * n / std::max(1LL, n - 1);
    return std::sqrt(var / n);
  }
};

using SlotOutcome = SlotDraw;

template <class Step>
EmpiricalStats run(long long slots, Step step) {
  if (slots < 1)
    throw DomainError("simulate_stopping: need at least one slot");
  Accumulator u, s, p, intf;
  long long gap = 0, gaps = 0, gap_total = 0;
  for (long long t = 0; t < slots; ++t) {
    SlotOutcome o = step();
    u.add(o.rate);
    s.add(o.power);
    intf.add(o.interference);
    p.add(o.success ? 1.0 : 0.0);
    ++gap;
    if (o.success) {
      gap_total += gap;
      ++gaps;
      gap = 0;
    }
  }
  EmpiricalStats out;
  out.slots = slots;
  out.mean = {u.mean(slots), s.mean(slots), intf.mean(slots), p.mean(slots)};
  out.std_error = {u.std_error(slots), s.std_error(slots), intf.std_error(slots), p.std_error(slots)};
  out.mean_delay = gaps > 0 ? static_cast<double>(gap_total) / gaps : kInf;
  return out;
}

}  // namespace

SlotDraw draw_slot(const ChannelEnsemble& ens, const OverlayPolicy& policy, Rng& occupancy, Rng& fading) {
  SlotDraw o;
  for (int i = 0; i < ens.M(); ++i) {
    bool free = occupancy.uniform() < ens.theta[i];
    double gamma = ens.gain.sample(fading);
    if (free && gamma >= policy.gamma_th[i]) {
      double pw = policy.power(gamma);
      double c = ens.c(i);
      o.success = true;
      o.channel = i;
      o.rate = c * std::log1p(pw * gamma);
      o.power = c * pw;
      break;
    }
  }
  return o;
}

EmpiricalStats simulate_stopping(const ChannelEnsemble& ens, const OverlayPolicy& policy, long long slots,
                                 std::uint64_t seed) {
  if (static_cast<int>(policy.gamma_th.size()) != ens.M())
    throw DomainError("simulate_stopping: threshold count differs from M");
  Rng occupancy(seed, 1);
  Rng fading(seed, 2);
  return run(slots, [&] { return draw_slot(ens, policy, occupancy, fading); });
}

EmpiricalStats simulate_stopping(const ChannelEnsemble& ens, const UnderlayPolicy& policy, long long slots,
                                 std::uint64_t seed) {
  if (static_cast<int>(policy.ratio.size()) != ens.M())
    throw DomainError("simulate_stopping: policy size differs from M");
  Rng occupancy(seed, 1);
  Rng fading(seed, 2);
  Rng sensing(seed, 3);
  return run(slots, [&] {
    SlotOutcome o;
    for (int i = 0; i < ens.M(); ++i) {
      bool busy = occupancy.uniform() >= ens.theta[i];
      double z = busy ? policy.model.z_busy.sample(sensing) : policy.model.z_free.sample(sensing);
      double gamma = ens.gain.sample(fading);
      if (gamma >= policy.threshold(i, z)) {
        double pw = policy.power(i, z, gamma);
        double c = ens.c(i);
        o.success = true;
        o.channel = i;
        o.rate = c * std::log1p(pw * gamma);
        o.power = c * pw;
        o.interference = busy ? c * pw * ens.pr_gain[i] : 0.0;
        break;
      }
    }
    return o;
  });
}

}  // namespace crlab::stopping
