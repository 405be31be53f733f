#pragma once

#include <cstdint>
#include <map>
#include <utility>

#include "crlab/stopping.hpp"

namespace crlab::deadline {

// Pr[at least K successes in t_f Bernoulli(p) slots].
double p_frame(int K, int t_f, double p);

// Smallest p with p_frame(K, t_f, p) >= r_min.
double required_p(int K, int t_f, double r_min);

struct FramePlan {
  int K = 1;
  int t_f = 1;
  double r_min = 0.5;
  int K_remaining = 1;
  int t_elapsed = 0;

  static FramePlan start(int K, int t_f, double r_min);
  int slots_left() const { return t_f - t_elapsed; }
  void validate() const;
};

struct Replan {
  FramePlan plan;
  double required_p = 0.0;
  bool complete = false;
  // Deadline unreachable: fewer slots left than packets due.
  bool failed = false;
};

Replan online_replan(const FramePlan& plan, bool transmitted_this_slot);

struct FrameSimOptions {
  double p_avg = 10.0;
  int K = 2;
  int t_f = 4;
  double r_min = 0.95;
  long long frames = 100000;
  std::uint64_t seed = 1;
  stopping::OverlayOptions solver{};
};

struct FrameSimResult {
  long long frames = 0;
  long long successes = 0;
  double success_rate = 0.0;
  double success_std_error = 0.0;
  // Nats delivered per slot over all frames * t_f slots.
  double throughput = 0.0;
  long long packets = 0;
  // Number of distinct (K_remaining, slots_left) policies solved.
  int policies_solved = 0;
  int infeasible_states = 0;
};

// Fixed policy with D_max = 1/required_p(K, t_f, r_min) for every slot.
FrameSimResult simulate_frames_offline(const stopping::ChannelEnsemble& ens, const FrameSimOptions& opts);
// Re-solves the slot problem from (K(t), t_f - t + 1) at every slot; unconstrained
// once the frame target is met or out of reach.
FrameSimResult simulate_frames_online(const stopping::ChannelEnsemble& ens, const FrameSimOptions& opts);

// Policy meeting p >= p_req, or the highest-p policy when p_req is out of reach.
struct PlannedPolicy {
  stopping::OverlaySolution solution;
  bool feasible = true;
};
PlannedPolicy plan_policy(const stopping::ChannelEnsemble& ens, double p_avg, double p_req,
                          const stopping::OverlayOptions& opts);

}  // namespace crlab::deadline
