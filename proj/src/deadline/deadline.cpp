#include <cmath>

#include "crlab/deadline.hpp"

namespace crlab::deadline {

double p_frame(int K, int t_f, double p) {
  if (t_f < 1 || K < 0 || K > t_f)
    throw DomainError("p_frame: need 0 <= K <= t_f, t_f >= 1");
  if (!(p >= 0.0 && p <= 1.0))
    throw DomainError("p_frame: p must lie in [0, 1]");
  if (K == 0 || p == 1.0)
    return 1.0;
  if (p == 0.0)
    return 0.0;
  const double lp = std::log(p), lq = std::log1p(-p);
  const double lg = std::lgamma(t_f + 1.0);
  double sum = 0.0;
  for (int n = K; n <= t_f; ++n)
    sum += std::exp(lg - std::lgamma(n + 1.0) - std::lgamma(t_f - n + 1.0) + n * lp + (t_f - n) * lq);
  return std::min(sum, 1.0);
}

double required_p(int K, int t_f, double r_min) {
  if (!(r_min < 1.0))
    throw InfeasibleError("required_p: r_min must be below 1", 1.0);
  if (K < 1 || K > t_f)
    throw DomainError("required_p: need 1 <= K <= t_f");
  if (r_min <= 0.0)
    return 0.0;
  double lo = 0.0, hi = 1.0;
  while (hi - lo > 1e-12) {
    double mid = 0.5 * (lo + hi);
    (p_frame(K, t_f, mid) >= r_min ? hi : lo) = mid;
  }
  return hi;
}

FramePlan FramePlan::start(int K, int t_f, double r_min) {
  FramePlan p;
  p.K = K;
  p.t_f = t_f;
  p.r_min = r_min;
  p.K_remaining = K;
  p.t_elapsed = 0;
  p.validate();
  return p;
}

void FramePlan::validate() const {
  if (K < 1 || K > t_f)
    throw DomainError("FramePlan: need 1 <= K <= t_f");
  if (!(r_min > 0.0 && r_min < 1.0))
    throw DomainError("FramePlan: r_min must lie in (0, 1)");
  if (K_remaining < 0 || K_remaining > K)
    throw DomainError("FramePlan: K_remaining out of range");
  if (t_elapsed < 0 || t_elapsed > t_f)
    throw DomainError("FramePlan: t_elapsed out of range");
}

Replan online_replan(const FramePlan& plan, bool transmitted_this_slot) {
  if (plan.t_elapsed >= plan.t_f || plan.K_remaining < 1)
    throw DomainError("online_replan: plan already finished");
  Replan out;
  out.plan = plan;
  if (transmitted_this_slot)
    --out.plan.K_remaining;
  ++out.plan.t_elapsed;
  if (out.plan.K_remaining == 0) {
    out.complete = true;
    out.required_p = 0.0;
    return out;
  }
  if (out.plan.slots_left() < out.plan.K_remaining) {
    out.failed = true;
    out.required_p = 1.0;
    return out;
  }
  out.required_p = required_p(out.plan.K_remaining, out.plan.slots_left(), plan.r_min);
  return out;
}

PlannedPolicy plan_policy(const stopping::ChannelEnsemble& ens, double p_avg, double p_req,
                          const stopping::OverlayOptions& opts) {
  PlannedPolicy out;
  double d_max = p_req > 0.0 ? 1.0 / p_req : stopping::kInf;
  try {
    out.solution = stopping::solve_overlay(ens, p_avg, std::max(d_max, 1.0), opts);
  } catch (const stopping::OverlayInfeasible& e) {
    out.solution = e.best_effort;
    out.feasible = false;
  }
  return out;
}

namespace {

// Every frame uses all t_f slots; `active` is false once the frame's target
// is met or out of reach.
template <class PolicyFor>
FrameSimResult run_frames(const stopping::ChannelEnsemble& ens, const FrameSimOptions& opts, PolicyFor policy_for) {
  Rng occupancy(opts.seed, 11);
  Rng fading(opts.seed, 12);
  FrameSimResult res;
  double nats = 0.0;
  for (long long f = 0; f < opts.frames; ++f) {
    FramePlan plan = FramePlan::start(opts.K, opts.t_f, opts.r_min);
    bool active = true;
    int delivered = 0;
    for (int t = 0; t < opts.t_f; ++t) {
      const stopping::OverlayPolicy& pol = policy_for(plan, active);
      stopping::SlotDraw d = stopping::draw_slot(ens, pol, occupancy, fading);
      if (d.success) {
        nats += d.rate;
        ++res.packets;
        ++delivered;
      }
      if (active) {
        Replan r = online_replan(plan, d.success);
        plan = r.plan;
        active = !r.complete && !r.failed;
      }
    }
    if (delivered >= opts.K) ++res.successes;
  }
  res.frames = opts.frames;
  res.success_rate = static_cast<double>(res.successes) / res.frames;
  res.success_std_error = std::sqrt(res.success_rate * (1.0 - res.success_rate) / res.frames);
  res.throughput = nats / (static_cast<double>(res.frames) * opts.t_f);
  return res;
}

}  // namespace

FrameSimResult simulate_frames_offline(const stopping::ChannelEnsemble& ens, const FrameSimOptions& opts) {
  double p0 = required_p(opts.K, opts.t_f, opts.r_min);
  PlannedPolicy fixed = plan_policy(ens, opts.p_avg, p0, opts.solver);
  FrameSimResult res = run_frames(ens, opts, [&](const FramePlan&, bool) -> const stopping::OverlayPolicy& {
    return fixed.solution.policy;
  });
  res.policies_solved = 1;
  res.infeasible_states = fixed.feasible ? 0 : 1;
  return res;
}

FrameSimResult simulate_frames_online(const stopping::ChannelEnsemble& ens, const FrameSimOptions& opts) {
  std::map<std::pair<int, int>, PlannedPolicy> cache;
  int infeasible = 0;
  FrameSimResult res = run_frames(ens, opts, [&](const FramePlan& plan, bool active) -> const stopping::OverlayPolicy& {
    // A met or missed target leaves nothing to protect: transmit unconstrained.
    auto key = active ? std::make_pair(plan.K_remaining, plan.slots_left()) : std::make_pair(0, 0);
    auto it = cache.find(key);
    if (it == cache.end()) {
      double p = active ? required_p(plan.K_remaining, plan.slots_left(), plan.r_min) : 0.0;
      it = cache.emplace(key, plan_policy(ens, opts.p_avg, p, opts.solver)).first;
      if (!it->second.feasible) ++infeasible;
    }
    return it->second.solution.policy;
  });
  res.policies_solved = static_cast<int>(cache.size());
  res.infeasible_states = infeasible;
  return res;
}

}  // namespace crlab::deadline
