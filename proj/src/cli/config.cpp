#include <cstdio>
#include <fstream>
#include <sstream>

#include "crlab/errors.hpp"
#include "crlab/experiment.hpp"

namespace crlab::cli {

namespace {

Json ensemble_block() {
  return {{"M", 10}, {"theta_step", 0.05}, {"tau_over_T", 0.05}, {"gain_mean", 1.0}, {"order", "ascending"}};
}

Json table_fleet() {
  Json su1 = {{"lambda", 0.001}, {"d", 1e4}, {"gain_mean", 2.0}, {"interference_mean", 0.4}, {"L", 1000}};
  Json su2 = {{"lambda", 0.001}, {"d", 1e4}, {"gain_mean", 4.0}, {"interference_mean", 0.2}, {"L", 1000}};
  return {{"sus", {su1, su2}}, {"p_max", 100.0}, {"i_inst", 50.0}, {"i_avg", 25.0},      {"V", 10.0},
          {"epsilon", 0.1},    {"r_max", 82.0},  {"admission_control", true}};
}

Json range(double step, int n) {
  Json v = Json::array();
  for (int k = 1; k <= n; ++k) v.push_back(step * k);
  return v;
}

const char* type_name(const Json& j) { return j.type_name(); }

struct Checker {
  const Json& doc;
  std::vector<std::string>& errors;

  const Json* find(const std::string& path) const {
    const Json* node = &doc;
    std::size_t start = 0;
    while (start <= path.size()) {
      std::size_t dot = path.find('.', start);
      std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (!node->is_object() || !node->contains(key))
        return nullptr;
      node = &(*node)[key];
      if (dot == std::string::npos)
        break;
      start = dot + 1;
    }
    return node;
  }

  void fail(const std::string& path, const std::string& what) { errors.push_back(path + ": " + what); }

  const Json* need(const std::string& path) {
    const Json* j = find(path);
    if (!j) fail(path, "missing required field");
    return j;
  }

  // Number in [lo, hi] (open ends when the flags say so); null allowed when nullable.
  void number(const std::string& path, double lo, double hi, bool lo_open, bool hi_open, bool nullable = false) {
    const Json* j = nullable ? find(path) : need(path);
    if (!j || (nullable && j->is_null())) return;
    check_number(path, *j, lo, hi, lo_open, hi_open);
  }

  void check_number(const std::string& path, const Json& j, double lo, double hi, bool lo_open, bool hi_open) {
    if (!j.is_number()) {
      fail(path, std::string("expected a number, got ") + type_name(j));
      return;
    }
    double x = j.get<double>();
    bool ok = (lo_open ? x > lo : x >= lo) && (hi_open ? x < hi : x <= hi);
    if (!ok) {
      std::ostringstream msg;
      msg << "value " << x << " outside " << (lo_open ? "(" : "[") << lo << ", " << hi << (hi_open ? ")" : "]");
      fail(path, msg.str());
    }
  }

  void integer(const std::string& path, long long lo, long long hi) {
    const Json* j = need(path);
    if (!j) return;
    if (!j->is_number_integer()) {
      fail(path, std::string("expected an integer, got ") + type_name(*j));
      return;
    }
    long long x = j->get<long long>();
    if (x < lo || x > hi) fail(path, "value " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                                         std::to_string(hi) + "]");
  }

  void boolean(const std::string& path) {
    const Json* j = need(path);
    if (j && !j->is_boolean()) fail(path, std::string("expected a boolean, got ") + type_name(*j));
  }
};

constexpr double kBig = 1e300;

void check_ensemble(Checker& c) {
  const Json* theta = c.find("ensemble.theta");
  long long M = 0;
  if (theta) {
    if (!theta->is_array() || theta->empty()) {
      c.fail("ensemble.theta", "expected a non-empty array");
    } else {
      for (std::size_t i = 0; i < theta->size(); ++i)
        c.check_number("ensemble.theta[" + std::to_string(i) + "]", (*theta)[i], 0.0, 1.0, false, false);
      M = static_cast<long long>(theta->size());
    }
  } else {
    c.integer("ensemble.M", 1, 1000);
    c.number("ensemble.theta_step", 0.0, 1.0, true, false);
    const Json* m = c.find("ensemble.M");
    const Json* step = c.find("ensemble.theta_step");
    if (m && m->is_number_integer()) M = m->get<long long>();
    if (step && step->is_number() && M > 0 && step->get<double>() * M > 1.0 + 1e-12)
      c.fail("ensemble.theta_step", "theta_step * M exceeds 1");
  }
  c.number("ensemble.tau_over_T", 0.0, 1.0, true, true);
  const Json* tau = c.find("ensemble.tau_over_T");
  if (tau && tau->is_number() && M > 0 && 1.0 - M * tau->get<double>() <= 0.0)
    c.fail("ensemble.tau_over_T", "sensing all M channels leaves no transmission time");
  c.number("ensemble.gain_mean", 0.0, kBig, true, false);
  const Json* order = c.find("ensemble.order");
  if (order && !(order->is_string() && (*order == "ascending" || *order == "descending")))
    c.fail("ensemble.order", "expected \"ascending\" or \"descending\"");
}

void check_fleet(Checker& c) {
  const Json* sus = c.need("fleet.sus");
  if (sus) {
    if (!sus->is_array() || sus->empty()) {
      c.fail("fleet.sus", "expected a non-empty array");
    } else {
      for (std::size_t i = 0; i < sus->size(); ++i) {
        std::string p = "fleet.sus[" + std::to_string(i) + "]";
        const Json& s = (*sus)[i];
        auto field = [&](const char* k, double lo, double hi, bool lo_open, bool hi_open) {
          if (!s.contains(k))
            c.fail(p + "." + k, "missing required field");
          else
            c.check_number(p + "." + k, s[k], lo, hi, lo_open, hi_open);
        };
        field("lambda", 0.0, 1.0, false, true);
        field("d", 1.0, kBig, false, false);
        field("gain_mean", 0.0, kBig, true, false);
        field("interference_mean", 0.0, kBig, true, false);
        if (!s.contains("L"))
          c.fail(p + ".L", "missing required field");
        else if (!s["L"].is_number_integer() || s["L"].get<long long>() < 1)
          c.fail(p + ".L", "expected a positive integer");
      }
    }
  }
  c.number("fleet.p_max", 0.0, kBig, true, false);
  c.number("fleet.i_inst", 0.0, kBig, true, false);
  c.number("fleet.i_avg", 0.0, kBig, false, false, true);
  c.number("fleet.V", 0.0, kBig, true, false);
  c.number("fleet.epsilon", 0.0, 1.0, true, true);
  c.number("fleet.r_max", 0.0, kBig, true, false, true);
  c.boolean("fleet.admission_control");
}

void check_simulate(Checker& c) {
  const Json* pols = c.need("simulate.policies");
  if (pols) {
    if (!pols->is_array() || pols->empty()) {
      c.fail("simulate.policies", "expected a non-empty array");
    } else {
      for (const auto& p : *pols)
        if (!p.is_string() || (p != "DOIC" && p != "DOAC" && p != "SUBOPT" && p != "CSMA"))
          c.fail("simulate.policies", "unknown policy " + p.dump());
    }
  }
  c.integer("simulate.horizon", 1, 1LL << 40);
  const Json* alphas = c.need("simulate.csi_alphas");
  if (alphas) {
    if (!alphas->is_array() || alphas->empty())
      c.fail("simulate.csi_alphas", "expected a non-empty array");
    else
      for (std::size_t i = 0; i < alphas->size(); ++i)
        c.check_number("simulate.csi_alphas[" + std::to_string(i) + "]", (*alphas)[i], 0.0, 2.0, false, true);
  }
  c.boolean("simulate.record_slots");
  c.boolean("simulate.record_frames");
}

void check_mode(Checker& c, const std::string& mode) {
  if (mode == "solve-overlay") {
    check_ensemble(c);
    c.number("overlay.p_avg", 0.0, kBig, true, false);
    c.number("overlay.d_max", 1.0, kBig, false, false, true);
    c.integer("overlay.k", 1, 1000);
    c.number("overlay.p_max", 0.0, kBig, true, false, true);
  } else if (mode == "solve-underlay") {
    check_ensemble(c);
    c.number("underlay.i_avg", 0.0, kBig, true, false);
    c.number("underlay.p_avg", 0.0, kBig, true, false, true);
    c.number("underlay.d_max", 1.0, kBig, false, false, true);
    c.integer("underlay.samples", 1, 10000);
    c.number("underlay.noise_var", 0.0, kBig, true, false);
    c.number("underlay.energy", 0.0, kBig, true, false);
  } else if (mode == "solve-multisu") {
    check_ensemble(c);
    c.integer("multisu.L", 1, 1000000);
    c.number("multisu.p_avg", 0.0, kBig, true, false);
    c.number("multisu.d_max", 1.0, kBig, false, false, true);
    c.number("multisu.d_max_factor", 1.0, kBig, false, false, true);
  } else if (mode == "plan-frame") {
    check_ensemble(c);
    c.integer("frame.K", 1, 1000);
    c.integer("frame.t_f", 1, 1000);
    c.number("frame.r_min", 0.0, 1.0, true, true);
    c.integer("frame.frames", 1, 1LL << 40);
    c.number("frame.p_avg", 0.0, kBig, true, false);
    const Json* K = c.find("frame.K");
    const Json* tf = c.find("frame.t_f");
    if (K && tf && K->is_number_integer() && tf->is_number_integer() && K->get<long long>() > tf->get<long long>())
      c.fail("frame.K", "K exceeds t_f");
  } else if (mode == "simulate") {
    check_fleet(c);
    check_simulate(c);
  }
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"ch2-overlay", "ch2-underlay", "ch2-multisu", "ch2-deadline", "ch3-table"};
}

Json preset(const std::string& name) {
  Json doc = {{"seeds", {1}}, {"output_dir", "out/" + name}};
  if (name == "ch2-overlay") {
    doc["mode"] = "sweep";
    doc["ensemble"] = ensemble_block();
    doc["overlay"] = {{"p_avg", 10.0}, {"d_max", 1.02}, {"k", 5}, {"p_max", nullptr}};
    doc["sweep"] = {{"mode", "solve-overlay"}, {"parameter", "overlay.p_avg"}, {"values", range(1.0, 10)}};
  } else if (name == "ch2-underlay") {
    doc["mode"] = "sweep";
    doc["ensemble"] = ensemble_block();
    doc["underlay"] = {{"i_avg", 1.0}, {"p_avg", nullptr}, {"d_max", nullptr},
                       {"samples", 10}, {"noise_var", 1.0}, {"energy", 2.0}};
    doc["sweep"] = {{"mode", "solve-underlay"},
                    {"parameter", "underlay.i_avg"},
                    {"values", {0.1, 0.2, 0.5, 1.0, 2.0, 5.0}}};
  } else if (name == "ch2-multisu") {
    doc["mode"] = "sweep";
    doc["ensemble"] = ensemble_block();
    doc["multisu"] = {{"L", 30}, {"p_avg", 10.0}, {"d_max", nullptr}, {"d_max_factor", 1.02}};
    doc["sweep"] = {{"mode", "solve-multisu"}, {"parameter", "multisu.p_avg"}, {"values", range(1.0, 10)}};
  } else if (name == "ch2-deadline") {
    doc["mode"] = "sweep";
    doc["ensemble"] = ensemble_block();
    doc["frame"] = {{"K", 2}, {"t_f", 4}, {"r_min", 0.95}, {"frames", 100000}, {"p_avg", 10.0}};
    doc["sweep"] = {{"mode", "plan-frame"}, {"parameter", "frame.p_avg"}, {"values", range(1.0, 10)}};
  } else if (name == "ch3-table") {
    doc["mode"] = "sweep";
    doc["fleet"] = table_fleet();
    doc["simulate"] = {{"policies", {"DOIC", "DOAC", "SUBOPT", "CSMA"}},
                       {"horizon", 1000000},
                       {"csi_alphas", {0.0, 0.1}},
                       {"record_slots", false},
                       {"record_frames", false}};
    doc["sweep"] = {{"mode", "simulate"}, {"parameter", "fleet.sus.*.lambda"}, {"values", range(1e-3, 10)}};
  } else {
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
  }
  return doc;
}

std::vector<Json*> resolve_path(Json& doc, const std::string& path) {
  std::vector<Json*> nodes{&doc};
  std::istringstream parts(path);
  std::string key;
  while (std::getline(parts, key, '.')) {
    std::vector<Json*> next;
    for (Json* n : nodes) {
      if (key == "*") {
        if (n->is_array())
          for (auto& e : *n) next.push_back(&e);
      } else if (n->is_object() && n->contains(key)) {
        next.push_back(&(*n)[key]);
      }
    }
    nodes = std::move(next);
  }
  return nodes;
}

std::vector<std::string> validate(const Json& doc) {
  std::vector<std::string> errors;
  if (!doc.is_object()) return {"<root>: expected a JSON object"};
  Checker c{doc, errors};
  std::string mode;
  const Json* m = c.need("mode");
  if (m) {
    if (!m->is_string() || std::find(kModes.begin(), kModes.end(), m->get<std::string>()) == kModes.end())
      c.fail("mode", "expected one of solve-overlay, solve-underlay, solve-multisu, plan-frame, simulate, sweep");
    else
      mode = m->get<std::string>();
  }
  const Json* seeds = c.need("seeds");
  if (seeds) {
    if (!seeds->is_array() || seeds->empty())
      c.fail("seeds", "expected a non-empty array of integers");
    else
      for (const auto& s : *seeds)
        if (!s.is_number_integer() || s.get<long long>() < 0) c.fail("seeds", "seed " + s.dump() + " is not a nonnegative integer");
  }
  const Json* out = c.need("output_dir");
  if (out && !out->is_string()) c.fail("output_dir", "expected a string");

  if (mode == "sweep") {
    const Json* sm = c.need("sweep.mode");
    std::string inner;
    if (sm) {
      if (!sm->is_string() || *sm == "sweep" ||
          std::find(kModes.begin(), kModes.end(), sm->get<std::string>()) == kModes.end())
        c.fail("sweep.mode", "expected a non-sweep mode");
      else
        inner = sm->get<std::string>();
    }
    const Json* param = c.need("sweep.parameter");
    if (param) {
      if (!param->is_string()) {
        c.fail("sweep.parameter", "expected a string path");
      } else {
        Json copy = doc;
        auto nodes = resolve_path(copy, param->get<std::string>());
        if (nodes.empty()) c.fail("sweep.parameter", "path '" + param->get<std::string>() + "' matches nothing");
        for (Json* n : nodes)
          if (!n->is_number() && !n->is_null()) {
            c.fail("sweep.parameter", "path '" + param->get<std::string>() + "' is not a scalar number");
            break;
          }
      }
    }
    const Json* values = c.need("sweep.values");
    if (values) {
      if (!values->is_array())
        c.fail("sweep.values", "expected an array");
      else
        for (const auto& v : *values)
          if (!v.is_number()) c.fail("sweep.values", "value " + v.dump() + " is not a number");
    }
    if (!inner.empty()) check_mode(c, inner);
  } else if (!mode.empty()) {
    check_mode(c, mode);
  }
  return errors;
}

ExperimentConfig from_document(Json doc) {
  if (doc.is_object() && doc.contains("preset")) {
    if (!doc["preset"].is_string())
      throw ConfigError("preset: expected a string");
    Json base = preset(doc["preset"].get<std::string>());
    doc.erase("preset");
    base.merge_patch(doc);
    doc = std::move(base);
  }
  auto errors = validate(doc);
  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  ExperimentConfig cfg;
  cfg.mode = doc["mode"].get<std::string>();
  for (const auto& s : doc["seeds"]) cfg.seeds.push_back(s.get<std::uint64_t>());
  cfg.output_dir = doc["output_dir"].get<std::string>();
  cfg.doc = std::move(doc);
  return cfg;
}

ExperimentConfig load_config_text(const std::string& text, const std::string& source) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    // Byte offset to line/column.
    std::size_t pos = std::min<std::size_t>(e.byte, text.size());
    int line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < pos; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": parse error: " + e.what());
  }
  return from_document(std::move(doc));
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError(path + ": cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_config_text(buf.str(), path);
}

std::string config_hash(const Json& doc) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : doc.dump()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace crlab::cli
