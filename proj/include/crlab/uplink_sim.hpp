#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "crlab/sched.hpp"

namespace crlab::sim {

enum class Policy { DOIC, DOAC, SUBOPT, CSMA };

std::string to_string(Policy p);
Policy parse_policy(const std::string& name);

struct SimOptions {
  Policy policy = Policy::DOIC;
  long long horizon = 1000000;
  std::uint64_t seed = 1;
  std::optional<double> csi_alpha;
  bool record_slots = false;
  bool record_frames = true;
  // Stop early once this many frames have closed.
  std::optional<long long> max_frames;
};

struct SlotRecord {
  long long slot = 0;
  int su = -1;  // -1 on idle slots
  double power = 0.0;
  double g = 0.0;
  double gamma = 0.0;
  double bits = 0.0;
  double interference = 0.0;
};

struct FrameRecord {
  long long index = 0;
  long long start = 0;  // first slot (1-based)
  long long T = 0;
  long long idle = 0;
  long long busy = 0;
  std::vector<double> Y;
  double X = 0.0;
  std::vector<int> priority;
  std::vector<double> power_params;
  bool degraded = false;
  // False for the frame still open at the horizon.
  bool closed = true;
};

struct SuSummary {
  long long arrivals = 0;
  long long completed = 0;
  long long in_flight = 0;  // arrived but unfinished at the horizon
  double delay_sum = 0.0;   // over completed packets
  double bits_sent = 0.0;
  long long slots_served = 0;
  double mean_delay = 0.0;
  double throughput = 0.0;     // bits per slot
  double empirical_rho = 0.0;  // fraction of slots serving this SU
};

struct SimTrace {
  int N = 0;
  long long horizon = 0;  // slots actually simulated
  sched::QueueingConstants consts;
  std::vector<SlotRecord> slots;
  std::vector<FrameRecord> frames;
  std::vector<SuSummary> sus;
  // Flat per-slot arrays (slot-major, N entries per slot) when slots are recorded:
  // queue length at the start of the slot, arrival indicator, completion indicator.
  std::vector<int> queue_start;
  std::vector<std::uint8_t> arrived;
  std::vector<std::uint8_t> served;
  double interference_energy = 0.0;
  double max_slot_interference = 0.0;
  long long interference_violations = 0;
  long long frames_closed = 0;
  long long degraded_frames = 0;
  sched::VirtualQueueState final_state;
};

SimTrace run_sim(const sched::FleetConfig& fleet, const SimOptions& opts);

double measure_interference(const SimTrace& trace);
// Mean delay per SU over packets that both arrived and completed in the run.
std::vector<double> measure_delays(const SimTrace& trace);

struct MeanRateDiagnostic {
  long long K = 0;
  std::vector<double> Y_over_K;
  double X_over_K = 0.0;
};
MeanRateDiagnostic mean_rate_diagnostic(const SimTrace& trace);

// CSV emission with fixed column orders.
void write_slots_csv(const SimTrace& trace, std::ostream& out);
void write_frames_csv(const SimTrace& trace, std::ostream& out);

}  // namespace crlab::sim
