#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "crlab/csv.hpp"
#include "crlab/deadline.hpp"
#include "crlab/errors.hpp"
#include "crlab/experiment.hpp"
#include "crlab/uplink_sim.hpp"

namespace crlab::cli {

namespace fs = std::filesystem;
using stopping::ChannelEnsemble;
using stopping::kInf;

int RunReport::failures() const {
  int n = 0;
  for (const auto& p : points) n += p.ok ? 0 : 1;
  return n;
}

int worker_count(int requested) {
  if (const char* env = std::getenv("CRLAB_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(v);
  }
  return std::max(1, requested);
}

namespace {

struct Row {
  std::string variant;
  std::string su;  // "all", "sum" or a 1-based SU index
  std::string metric;
  double value;
};

using Rows = std::vector<Row>;

std::optional<double> opt_number(const Json& block, const char* key) {
  if (!block.contains(key) || block[key].is_null()) return std::nullopt;
  return block[key].get<double>();
}

ChannelEnsemble make_ensemble(const Json& e) {
  auto gain = numerics::Density1D::exponential(e["gain_mean"].get<double>());
  double tau = e["tau_over_T"].get<double>();
  ChannelEnsemble ens = e.contains("theta")
                            ? ChannelEnsemble::make(e["theta"].get<std::vector<double>>(), tau, gain)
                            : ChannelEnsemble::linear(e["M"].get<int>(), e["theta_step"].get<double>(), tau, gain);
  if (e.value("order", std::string("ascending")) == "descending") ens = ens.reversed();
  return ens;
}

sched::FleetConfig make_fleet(const Json& f) {
  sched::FleetConfig fleet;
  for (const auto& s : f["sus"]) {
    sched::SuProfile su;
    su.lambda = s["lambda"].get<double>();
    su.d = s["d"].get<double>();
    su.gain = numerics::Density1D::exponential(s["gain_mean"].get<double>());
    su.interference = numerics::Density1D::exponential(s["interference_mean"].get<double>());
    su.L = s["L"].get<int>();
    fleet.sus.push_back(su);
  }
  fleet.p_max = f["p_max"].get<double>();
  fleet.i_inst = f["i_inst"].get<double>();
  fleet.i_avg = opt_number(f, "i_avg");
  fleet.V = f["V"].get<double>();
  fleet.epsilon = f["epsilon"].get<double>();
  fleet.r_max = opt_number(f, "r_max");
  fleet.admission_control = f["admission_control"].get<bool>();
  fleet.validate();
  return fleet;
}

void add_stats(Rows& rows, const std::string& variant, const stopping::StoppingStats& s) {
  rows.push_back({variant, "all", "throughput", s.throughput});
  rows.push_back({variant, "all", "avg_power", s.avg_power});
  rows.push_back({variant, "all", "avg_interference", s.avg_interference});
  rows.push_back({variant, "all", "p_success", s.p_success});
  rows.push_back({variant, "all", "expected_delay", s.expected_delay()});
}

void add_overlay(Rows& rows, const std::string& variant, const stopping::OverlaySolution& sol, bool feasible) {
  add_stats(rows, variant, sol.stats);
  rows.push_back({variant, "all", "lambda_p", sol.policy.lambda_p});
  rows.push_back({variant, "all", "lambda_d", sol.policy.lambda_d});
  rows.push_back({variant, "all", "feasible", feasible ? 1.0 : 0.0});
}

// Constrained solve; an unreachable delay bound reports the best-effort policy.
void overlay_variant(Rows& rows, const std::string& variant, const ChannelEnsemble& ens, double p_avg,
                     double d_max, const stopping::OverlayOptions& opts) {
  try {
    add_overlay(rows, variant, stopping::solve_overlay(ens, p_avg, d_max, opts), true);
  } catch (const stopping::OverlayInfeasible& e) {
    add_overlay(rows, variant, e.best_effort, false);
  }
}

Rows eval_overlay(const Json& doc) {
  ChannelEnsemble ens = make_ensemble(doc["ensemble"]);
  const Json& o = doc["overlay"];
  double p_avg = o["p_avg"].get<double>();
  double d_max = opt_number(o, "d_max").value_or(kInf);
  stopping::OverlayOptions opts;
  opts.p_max = opt_number(o, "p_max");

  Rows rows;
  overlay_variant(rows, "constrained", ens, p_avg, d_max, opts);
  overlay_variant(rows, "constrained_reversed", ens.reversed(), p_avg, d_max, opts);
  overlay_variant(rows, "unconstrained", ens, p_avg, kInf, opts);
  add_overlay(rows, "no_osr", stopping::solve_no_osr(ens, p_avg, opts), true);
  auto km = stopping::k_out_of_m(ens, o["k"].get<int>(), p_avg);
  add_stats(rows, "k_of_m", km.stats);
  rows.push_back({"k_of_m", "all", "lambda_p", km.lambda_p});
  rows.push_back({"k_of_m", "all", "K", static_cast<double>(km.K)});
  return rows;
}

Rows eval_underlay(const Json& doc) {
  ChannelEnsemble ens = make_ensemble(doc["ensemble"]);
  const Json& u = doc["underlay"];
  auto model = stopping::SensingModel::energy_detector(u["samples"].get<int>(), u["noise_var"].get<double>(),
                                                       u["energy"].get<double>());
  double i_avg = u["i_avg"].get<double>();
  auto p_avg = opt_number(u, "p_avg");
  double d_max = opt_number(u, "d_max").value_or(kInf);

  Rows rows;
  for (auto [name, rule] : {std::pair{"osr", stopping::ThresholdRule::Optimal},
                            std::pair{"no_osr", stopping::ThresholdRule::Floor}}) {
    stopping::UnderlayOptions opts;
    opts.rule = rule;
    auto sol = stopping::solve_underlay(ens, model, i_avg, p_avg, d_max, opts);
    add_stats(rows, name, sol.stats);
    rows.push_back({name, "all", "lambda_i", sol.policy.lambda_i});
    rows.push_back({name, "all", "lambda_p", sol.policy.lambda_p});
    rows.push_back({name, "all", "lambda_d", sol.policy.lambda_d});
  }
  return rows;
}

Rows eval_multisu(const Json& doc) {
  ChannelEnsemble ens = make_ensemble(doc["ensemble"]);
  const Json& m = doc["multisu"];
  int L = m["L"].get<int>();
  double p_avg = m["p_avg"].get<double>();

  Rows rows;
  std::optional<double> d_max = opt_number(m, "d_max");
  if (!d_max) {
    if (auto factor = opt_number(m, "d_max_factor")) {
      // Smallest achievable delay comes from stopping at the first usable channel.
      ChannelEnsemble shared = ens;
      shared.gain = stopping::max_gain_density(ens.gain.mean());
      stopping::OverlayOptions opts;
      opts.rec.users = L;
      double d_min = stopping::solve_no_osr(shared, p_avg, opts).stats.expected_delay();
      d_max = *factor * d_min;
      rows.push_back({"constrained", "all", "d_min", d_min});
    }
  }
  auto one = [&](const std::string& variant, double dm) {
    stopping::MultiSuSolution sol;
    bool feasible = true;
    try {
      sol = stopping::solve_multi_su(ens, L, p_avg, dm);
    } catch (const stopping::OverlayInfeasible& e) {
      sol.L = L;
      sol.solution = e.best_effort;
      feasible = false;
    }
    add_overlay(rows, variant, sol.solution, feasible);
    rows.push_back({variant, "all", "d_max", dm});
    rows.push_back({variant, "all", "max_gap", sol.max_gap});
    rows.push_back({variant, "all", "small_L_warning", sol.small_L_warning ? 1.0 : 0.0});
  };
  one("constrained", d_max.value_or(kInf));
  one("unconstrained", kInf);
  return rows;
}

Rows eval_frame(const Json& doc, std::uint64_t seed) {
  ChannelEnsemble ens = make_ensemble(doc["ensemble"]);
  const Json& f = doc["frame"];
  deadline::FrameSimOptions opts;
  opts.K = f["K"].get<int>();
  opts.t_f = f["t_f"].get<int>();
  opts.r_min = f["r_min"].get<double>();
  opts.frames = f["frames"].get<long long>();
  opts.p_avg = f["p_avg"].get<double>();
  opts.seed = seed;

  Rows rows;
  double p_req = deadline::required_p(opts.K, opts.t_f, opts.r_min);
  for (const char* variant : {"offline", "online"}) {
    auto r = std::string(variant) == "offline" ? deadline::simulate_frames_offline(ens, opts)
                                               : deadline::simulate_frames_online(ens, opts);
    rows.push_back({variant, "all", "required_p", p_req});
    rows.push_back({variant, "all", "frames", static_cast<double>(r.frames)});
    rows.push_back({variant, "all", "success_rate", r.success_rate});
    rows.push_back({variant, "all", "success_std_error", r.success_std_error});
    rows.push_back({variant, "all", "throughput", r.throughput});
    rows.push_back({variant, "all", "packets", static_cast<double>(r.packets)});
    rows.push_back({variant, "all", "policies_solved", static_cast<double>(r.policies_solved)});
    rows.push_back({variant, "all", "infeasible_states", static_cast<double>(r.infeasible_states)});
  }
  return rows;
}

struct SimEval {
  Rows rows;
  std::vector<std::pair<std::string, std::string>> extra_files;  // name, contents
};

SimEval eval_simulate(const Json& doc, std::uint64_t seed) {
  sched::FleetConfig fleet = make_fleet(doc["fleet"]);
  const Json& s = doc["simulate"];
  SimEval out;
  for (const auto& pname : s["policies"]) {
    for (const auto& a : s["csi_alphas"]) {
      sim::SimOptions opts;
      opts.policy = sim::parse_policy(pname.get<std::string>());
      opts.horizon = s["horizon"].get<long long>();
      opts.seed = seed;
      double alpha = a.get<double>();
      if (alpha > 0.0) opts.csi_alpha = alpha;
      opts.record_slots = s["record_slots"].get<bool>();
      opts.record_frames = s["record_frames"].get<bool>();
      auto tr = sim::run_sim(fleet, opts);

      std::string variant = sim::to_string(opts.policy) + (alpha > 0.0 ? "/csi=" + csv::num(alpha) : "");
      double delay_sum = 0.0, rate_sum = 0.0;
      std::optional<sim::MeanRateDiagnostic> diag;
      if (tr.frames_closed > 0) diag = sim::mean_rate_diagnostic(tr);
      for (int i = 0; i < tr.N; ++i) {
        const auto& su = tr.sus[i];
        std::string id = std::to_string(i + 1);
        out.rows.push_back({variant, id, "lambda_admitted", tr.consts.lambda[i]});
        out.rows.push_back({variant, id, "mean_delay", su.mean_delay});
        out.rows.push_back({variant, id, "throughput", su.throughput});
        out.rows.push_back({variant, id, "arrivals", static_cast<double>(su.arrivals)});
        out.rows.push_back({variant, id, "completed", static_cast<double>(su.completed)});
        out.rows.push_back({variant, id, "in_flight", static_cast<double>(su.in_flight)});
        out.rows.push_back({variant, id, "empirical_rho", su.empirical_rho});
        out.rows.push_back({variant, id, "Y_over_K", diag ? diag->Y_over_K[i] : std::nan("")});
        delay_sum += su.mean_delay;
        rate_sum += su.throughput;
      }
      out.rows.push_back({variant, "sum", "mean_delay", delay_sum});
      out.rows.push_back({variant, "sum", "throughput", rate_sum});
      out.rows.push_back({variant, "sum", "interference", sim::measure_interference(tr)});
      out.rows.push_back({variant, "sum", "max_slot_interference", tr.max_slot_interference});
      out.rows.push_back({variant, "sum", "violations", static_cast<double>(tr.interference_violations)});
      out.rows.push_back({variant, "sum", "frames", static_cast<double>(tr.frames_closed)});
      out.rows.push_back({variant, "sum", "degraded_frames", static_cast<double>(tr.degraded_frames)});
      out.rows.push_back({variant, "sum", "X_over_K", diag ? diag->X_over_K : std::nan("")});
      out.rows.push_back({variant, "sum", "admission_scale", tr.consts.admission_scale});

      std::string tag = sim::to_string(opts.policy) + "_csi" + csv::num(alpha);
      if (opts.record_slots) {
        std::ostringstream ss;
        sim::write_slots_csv(tr, ss);
        out.extra_files.emplace_back(tag + "_slots.csv", ss.str());
      }
      if (opts.record_frames) {
        std::ostringstream ss;
        sim::write_frames_csv(tr, ss);
        out.extra_files.emplace_back(tag + "_frames.csv", ss.str());
      }
    }
  }
  return out;
}

SimEval evaluate(const std::string& mode, const Json& doc, std::uint64_t seed) {
  if (mode == "solve-overlay") return {eval_overlay(doc), {}};
  if (mode == "solve-underlay") return {eval_underlay(doc), {}};
  if (mode == "solve-multisu") return {eval_multisu(doc), {}};
  if (mode == "plan-frame") return {eval_frame(doc, seed), {}};
  if (mode == "simulate") return eval_simulate(doc, seed);
  throw ConfigError("unsupported mode '" + mode + "'");
}

struct Task {
  int index;
  std::optional<double> value;
  std::uint64_t seed;
};

std::string point_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "point_%04d", index);
  return buf;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error("cannot write " + path.string());
  out << text;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  Json hashed = cfg.doc;
  hashed.erase("output_dir");
  RunReport report;
  report.hash = config_hash(hashed);

  const bool sweep = cfg.mode == "sweep";
  const std::string mode = sweep ? cfg.doc["sweep"]["mode"].get<std::string>() : cfg.mode;
  const std::string parameter = sweep ? cfg.doc["sweep"]["parameter"].get<std::string>() : "";
  std::vector<std::optional<double>> values;
  if (sweep)
    for (const auto& v : cfg.doc["sweep"]["values"]) values.emplace_back(v.get<double>());
  if (values.empty()) values.emplace_back(std::nullopt);

  std::vector<Task> tasks;
  for (const auto& v : values)
    for (auto seed : cfg.seeds) tasks.push_back({static_cast<int>(tasks.size()) + 1, v, seed});

  fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  report.points.resize(tasks.size());

  std::atomic<std::size_t> next{0};
  std::mutex log_mu;
  auto worker = [&] {
    for (std::size_t k = next++; k < tasks.size(); k = next++) {
      const Task& task = tasks[k];
      PointStatus st;
      st.index = task.index;
      st.value = task.value ? csv::num(*task.value) : "";
      st.seed = task.seed;
      try {
        Json doc = cfg.doc;
        if (task.value)
          for (Json* node : resolve_path(doc, parameter)) *node = *task.value;
        SimEval ev = evaluate(mode, doc, task.seed);
        std::ostringstream ss;
        csv::write_row(ss, {"config_hash", "seed", "parameter", "parameter_value", "variant", "su", "metric", "value"});
        std::string seed = std::to_string(task.seed);
        for (const auto& r : ev.rows)
          csv::write_row(ss, {report.hash, seed, parameter, st.value, r.variant, r.su, r.metric, csv::num(r.value)});
        st.file = point_name(task.index) + ".csv";
        write_file(dir / st.file, ss.str());
        for (const auto& [name, text] : ev.extra_files) write_file(dir / (point_name(task.index) + "_" + name), text);
      } catch (const std::exception& e) {
        st.ok = false;
        st.error = e.what();
        st.file.clear();
      }
      if (!opts.quiet) {
        std::lock_guard lock(log_mu);
        std::printf("[%d/%zu] %s%s seed=%llu %s\n", task.index, tasks.size(),
                    parameter.empty() ? "" : (parameter + "=" + st.value + " ").c_str(), mode.c_str(),
                    static_cast<unsigned long long>(task.seed), st.ok ? "ok" : ("FAILED: " + st.error).c_str());
        std::fflush(stdout);
      }
      report.points[k] = std::move(st);
    }
  };
  int n_workers = std::min<int>(worker_count(opts.jobs), static_cast<int>(tasks.size()));
  std::vector<std::thread> pool;
  for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ostringstream index;
  csv::write_row(index, {"config_hash", "point", "parameter", "parameter_value", "seed", "status", "file", "error"});
  Json manifest = {{"config_hash", report.hash}, {"mode", cfg.mode}, {"point_mode", mode},
                   {"parameter", parameter},     {"config", cfg.doc}, {"points", Json::array()}};
  for (const auto& p : report.points) {
    csv::write_row(index, {report.hash, csv::num(p.index), parameter, p.value, std::to_string(p.seed),
                           p.ok ? "ok" : "failed", p.file, p.error});
    manifest["points"].push_back({{"point", p.index},
                                  {"parameter_value", p.value},
                                  {"seed", p.seed},
                                  {"status", p.ok ? "ok" : "failed"},
                                  {"file", p.file},
                                  {"error", p.error}});
  }
  manifest["failures"] = report.failures();
  write_file(dir / "index.csv", index.str());
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  return report;
}

}  // namespace crlab::cli
