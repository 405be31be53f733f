#include <cmath>
#include <deque>

#include "crlab/uplink_sim.hpp"

namespace crlab::sim {

using sched::FramePlanState;
using sched::VirtualQueueState;

std::string to_string(Policy p) {
  switch (p) {
    case Policy::DOIC: return "DOIC";
    case Policy::DOAC: return "DOAC";
    case Policy::SUBOPT: return "SUBOPT";
    case Policy::CSMA: return "CSMA";
  }
  return "?";
}

Policy parse_policy(const std::string& name) {
  for (Policy p : {Policy::DOIC, Policy::DOAC, Policy::SUBOPT, Policy::CSMA})
    if (name == to_string(p)) return p;
  throw ConfigError("unknown policy '" + name + "' (expected DOIC, DOAC, SUBOPT or CSMA)");
}

namespace {

constexpr std::uint64_t kStreamsPerSu = 8;
constexpr std::uint64_t kDrawsPerSlot = 64;

enum Quantity : std::uint64_t { kArrival = 0, kGamma = 1, kG = 2, kGammaErr = 3, kGErr = 4 };
constexpr std::uint64_t kSchedulerStream = 7;

// Draws at slot t start at counter t * kDrawsPerSlot, so each draw is a pure
// function of (seed, SU, quantity, slot).
struct Streams {
  std::vector<Rng> rng;
  Rng scheduler;

  Streams(std::uint64_t seed, int n) : scheduler(seed, kSchedulerStream) {
    for (int i = 0; i < n; ++i)
      for (std::uint64_t q = 0; q < kStreamsPerSu; ++q) rng.emplace_back(seed, 16 + i * kStreamsPerSu + q);
  }
  Rng& at(int i, Quantity q, long long t) {
    Rng& r = rng[i * kStreamsPerSu + q];
    r.seek(static_cast<std::uint64_t>(t) * kDrawsPerSlot);
    return r;
  }
};

struct SuState {
  std::deque<long long> arrival_slots;
  double hol = 0.0;
};

FramePlanState frame_setup(Policy policy, const VirtualQueueState& state, const sched::QueueingConstants& consts,
                           const sched::FleetConfig& fleet) {
  switch (policy) {
    case Policy::DOIC:
      return sched::doic_frame_setup(state, consts, fleet);
    case Policy::DOAC:
    case Policy::CSMA:
      return sched::doac_frame_setup(state, consts);
    case Policy::SUBOPT:
      try {
        return sched::subopt_frame_setup(state, consts);
      } catch (const InfeasibleError&) {
        FramePlanState plan = sched::doic_frame_setup(state, consts, fleet);
        plan.degraded = true;
        return plan;
      }
  }
  throw DomainError("frame_setup: unknown policy");
}

}  // namespace

SimTrace run_sim(const sched::FleetConfig& fleet, const SimOptions& opts) {
  if (opts.horizon < 1)
    throw DomainError("run_sim: horizon must be at least 1");
  if (opts.csi_alpha && !(*opts.csi_alpha >= 0.0 && *opts.csi_alpha < 2.0))
    throw DomainError("run_sim: csi_alpha must lie in [0, 2)");
  SimTrace tr;
  tr.consts = sched::QueueingConstants::build(fleet);
  const auto& consts = tr.consts;
  const int n = fleet.N();
  tr.N = n;
  tr.sus.resize(n);
  Streams streams(opts.seed, n);
  std::vector<SuState> su(n);

  VirtualQueueState state = VirtualQueueState::zero(n);
  sched::FrameOutcome outcome;
  FrameRecord frame;
  FramePlanState plan;
  bool in_busy = false;

  auto open_frame = [&](long long t) {
    state.r = sched::auxiliary_r(state, consts, fleet);
    plan = frame_setup(opts.policy, state, consts, fleet);
    if (plan.degraded) ++tr.degraded_frames;
    frame = FrameRecord{};
    frame.index = state.frame_index;
    frame.start = t;
    frame.Y = state.Y;
    frame.X = state.X;
    frame.priority = plan.priority;
    frame.power_params = plan.power_params;
    frame.degraded = plan.degraded;
    outcome = sched::FrameOutcome{};
    outcome.delay_sum.assign(n, 0.0);
    outcome.arrivals.assign(n, 0);
  };
  auto close_frame = [&](long long t) {
    frame.T = outcome.T = t - frame.start;
    state = sched::update_virtual_queues(state, outcome, fleet.i_avg);
    ++tr.frames_closed;
    if (opts.record_frames) tr.frames.push_back(frame);
  };

  if (opts.record_slots) {
    tr.slots.reserve(opts.horizon);
    tr.queue_start.reserve(opts.horizon * n);
    tr.arrived.reserve(opts.horizon * n);
    tr.served.reserve(opts.horizon * n);
  }

  open_frame(1);
  long long t = 1;
  for (; t <= opts.horizon; ++t) {
    int total = 0;
    for (int i = 0; i < n; ++i) {
      if (opts.record_slots) tr.queue_start.push_back(static_cast<int>(su[i].arrival_slots.size()));
      bool arrival = streams.at(i, kArrival, t).uniform() < consts.lambda[i];
      if (opts.record_slots) tr.arrived.push_back(arrival ? 1 : 0);
      if (arrival) {
        if (su[i].arrival_slots.empty()) su[i].hol = fleet.sus[i].L;
        su[i].arrival_slots.push_back(t);
        ++outcome.arrivals[i];
        ++tr.sus[i].arrivals;
      }
      total += static_cast<int>(su[i].arrival_slots.size());
    }

    SlotRecord rec;
    rec.slot = t;
    if (total == 0) {
      if (in_busy) {
        close_frame(t);
        if (opts.max_frames && tr.frames_closed >= *opts.max_frames) {
          // Slot t belongs to the next frame; drop it.
          tr.queue_start.resize((t - 1) * n);
          tr.arrived.resize((t - 1) * n);
          break;
        }
        open_frame(t);
        in_busy = false;
      }
      ++frame.idle;
    } else {
      in_busy = true;
      ++frame.busy;
      int who = -1;
      if (opts.policy == Policy::CSMA) {
        int nonempty = 0;
        for (int i = 0; i < n; ++i) nonempty += su[i].arrival_slots.empty() ? 0 : 1;
        Rng& r = streams.scheduler;
        r.seek(static_cast<std::uint64_t>(t) * kDrawsPerSlot);
        int k = std::min(nonempty - 1, static_cast<int>(r.uniform() * nonempty));
        for (int i = 0; i < n; ++i) {
          if (su[i].arrival_slots.empty()) continue;
          if (k-- == 0) {
            who = i;
            break;
          }
        }
      } else {
        for (int i : plan.priority)
          if (!su[i].arrival_slots.empty()) {
            who = i;
            break;
          }
      }
      const auto& prof = fleet.sus[who];
      double gamma = prof.gain.sample(streams.at(who, kGamma, t));
      double g = prof.interference.sample(streams.at(who, kG, t));
      double gamma_est = gamma, g_est = g;
      if (opts.csi_alpha) {
        double a = *opts.csi_alpha;
        double eg = gamma * (1.0 + a / 2.0 * (2.0 * streams.at(who, kGammaErr, t).uniform() - 1.0));
        double eh = g * (1.0 + a / 2.0 * (2.0 * streams.at(who, kGErr, t).uniform() - 1.0));
        auto est = sched::csi_adjust(eg, eh, a);
        gamma_est = est.gamma;
        g_est = est.g;
      }
      double power = opts.policy == Policy::DOIC ? sched::doic_slot_power(g_est, fleet.i_inst, fleet.p_max)
                                                 : sched::doac_slot_power(g_est, plan.power_params[who], fleet.i_inst);
      double rate = std::log2(1.0 + power * gamma_est);
      if (fleet.r_max) rate = std::min(rate, *fleet.r_max);
      double bits = std::min(rate, su[who].hol);
      double interference = power * g;
      su[who].hol -= bits;
      tr.sus[who].bits_sent += bits;
      ++tr.sus[who].slots_served;
      tr.interference_energy += interference;
      outcome.interference_energy += interference;
      tr.max_slot_interference = std::max(tr.max_slot_interference, interference);
      if (interference > fleet.i_inst * (1.0 + 1e-12)) ++tr.interference_violations;

      bool done = su[who].hol <= 1e-9 * prof.L;
      if (done) {
        double w = static_cast<double>(t - su[who].arrival_slots.front() + 1);
        su[who].arrival_slots.pop_front();
        su[who].hol = su[who].arrival_slots.empty() ? 0.0 : prof.L;
        outcome.delay_sum[who] += w;
        tr.sus[who].delay_sum += w;
        ++tr.sus[who].completed;
      }
      rec = {t, who, power, g, gamma, bits, interference};
      if (opts.record_slots)
        for (int i = 0; i < n; ++i) tr.served.push_back(i == who && done ? 1 : 0);
    }
    if (total == 0 && opts.record_slots) tr.served.insert(tr.served.end(), n, 0);
    if (opts.record_slots) tr.slots.push_back(rec);
  }

  bool stopped_early = t <= opts.horizon;
  tr.horizon = stopped_early ? t - 1 : opts.horizon;
  if (!stopped_early && opts.record_frames) {
    FrameRecord open = frame;
    open.T = opts.horizon - frame.start + 1;
    open.closed = false;
    tr.frames.push_back(open);
  }
  tr.final_state = state;
  for (int i = 0; i < n; ++i) {
    auto& s = tr.sus[i];
    s.in_flight = static_cast<long long>(su[i].arrival_slots.size());
    s.mean_delay = s.completed > 0 ? s.delay_sum / s.completed : std::nan("");
    s.throughput = s.bits_sent / tr.horizon;
    s.empirical_rho = static_cast<double>(s.slots_served) / tr.horizon;
  }
  return tr;
}

double measure_interference(const SimTrace& trace) {
  if (trace.horizon < 1)
    throw DomainError("measure_interference: empty trace");
  return trace.interference_energy / trace.horizon;
}

std::vector<double> measure_delays(const SimTrace& trace) {
  std::vector<double> out;
  for (int i = 0; i < trace.N; ++i) {
    if (trace.sus[i].completed == 0)
      throw DomainError("measure_delays: SU " + std::to_string(i + 1) + " completed no packets");
    out.push_back(trace.sus[i].mean_delay);
  }
  return out;
}

MeanRateDiagnostic mean_rate_diagnostic(const SimTrace& trace) {
  MeanRateDiagnostic d;
  d.K = trace.frames_closed;
  if (d.K < 1)
    throw DomainError("mean_rate_diagnostic: no closed frames");
  for (double y : trace.final_state.Y) d.Y_over_K.push_back(y / d.K);
  d.X_over_K = trace.final_state.X / d.K;
  return d;
}

}  // namespace crlab::sim
