#include <sstream>

#include "crlab/csv.hpp"
#include "crlab/uplink_sim.hpp"

namespace crlab::sim {

void write_slots_csv(const SimTrace& trace, std::ostream& out) {
  csv::write_row(out, {"slot", "su", "power", "g", "gamma", "bits", "interference"});
  for (const auto& s : trace.slots)
    csv::write_row(out, {csv::num(s.slot), s.su < 0 ? "" : csv::num(s.su + 1), csv::num(s.power), csv::num(s.g),
                         csv::num(s.gamma), csv::num(s.bits), csv::num(s.interference)});
}

void write_frames_csv(const SimTrace& trace, std::ostream& out) {
  std::vector<std::string> head{"frame", "start", "T", "idle", "busy", "closed", "degraded", "X", "priority"};
  for (int i = 1; i <= trace.N; ++i) head.push_back("Y_" + std::to_string(i));
  for (int i = 1; i <= trace.N; ++i) head.push_back("P_" + std::to_string(i));
  csv::write_row(out, head);
  for (const auto& f : trace.frames) {
    std::ostringstream prio;
    for (std::size_t j = 0; j < f.priority.size(); ++j) prio << (j ? " " : "") << f.priority[j] + 1;
    std::vector<std::string> row{csv::num(f.index), csv::num(f.start), csv::num(f.T), csv::num(f.idle),
                                 csv::num(f.busy), f.closed ? "1" : "0", f.degraded ? "1" : "0", csv::num(f.X),
                                 prio.str()};
    for (double y : f.Y) row.push_back(csv::num(y));
    for (double p : f.power_params) row.push_back(csv::num(p));
    csv::write_row(out, row);
  }
}

}  // namespace crlab::sim
