#include <filesystem>
#include <fstream>
#include <sstream>

#include "crlab/csv.hpp"
#include "crlab/errors.hpp"
#include "crlab/experiment.hpp"
#include "doctest.h"

using namespace crlab;
using namespace crlab::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("crlab_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("csv formatting") {
  CHECK(csv::num(0.1) == "0.1");
  CHECK(csv::num(1.0 / 3.0) == "0.333333333333");
  CHECK(csv::num(std::nan("")) == "nan");
  CHECK(csv::num(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(csv::num(12345678901234.0) == "1.23456789012e+13");
  CHECK(csv::quote("plain") == "plain");
  CHECK(csv::quote("a,b") == "\"a,b\"");
  CHECK(csv::quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
  std::ostringstream out;
  csv::write_row(out, {"x", "a,b", "q\"", "line\nbreak"});
  auto rows = csv::parse(out.str());
  REQUIRE(rows.size() == 1u);
  CHECK(rows[0] == std::vector<std::string>{"x", "a,b", "q\"", "line\nbreak"});
}

TEST_CASE("presets carry the published parameters") {
  auto table = preset("ch3-table");
  CHECK(table["fleet"]["sus"].size() == 2u);
  CHECK(table["fleet"]["sus"][0]["L"] == 1000);
  CHECK(table["fleet"]["sus"][0]["gain_mean"] == 2.0);
  CHECK(table["fleet"]["sus"][1]["gain_mean"] == 4.0);
  CHECK(table["fleet"]["sus"][0]["interference_mean"] == 0.4);
  CHECK(table["fleet"]["sus"][1]["interference_mean"] == 0.2);
  CHECK(table["fleet"]["i_inst"] == 50.0);
  CHECK(table["fleet"]["p_max"] == 100.0);
  CHECK(table["fleet"]["r_max"] == 82.0);
  CHECK(table["fleet"]["V"] == 10.0);
  CHECK(table["fleet"]["epsilon"] == 0.1);
  CHECK(table["simulate"]["csi_alphas"][1] == 0.1);
  CHECK(table["sweep"]["values"].size() == 10u);
  CHECK(table["sweep"]["values"][9].get<double>() == doctest::Approx(0.01));

  auto ov = preset("ch2-overlay");
  CHECK(ov["ensemble"]["M"] == 10);
  CHECK(ov["ensemble"]["theta_step"] == 0.05);
  CHECK(ov["ensemble"]["tau_over_T"] == 0.05);
  CHECK(ov["ensemble"]["gain_mean"] == 1.0);
  CHECK(ov["overlay"]["d_max"] == 1.02);
  for (const auto& name : preset_names()) CHECK(validate(preset(name)).empty());
  CHECK_THROWS_AS(preset("nope"), ConfigError);
}

TEST_CASE("validation names every offending field") {
  auto doc = preset("ch2-overlay");
  doc["overlay"].erase("p_avg");
  doc["ensemble"]["tau_over_T"] = 0.2;
  doc["seeds"] = Json::array({-1});
  auto errs = validate(doc);
  auto has = [&](const std::string& s) {
    for (const auto& e : errs)
      if (e.find(s) != std::string::npos) return true;
    return false;
  };
  CHECK(has("overlay.p_avg: missing required field"));
  CHECK(has("ensemble.tau_over_T"));
  CHECK(has("seeds"));
  CHECK_THROWS_AS(from_document(doc), ConfigError);
  try {
    from_document(doc);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("overlay.p_avg") != std::string::npos);
  }
}

TEST_CASE("parse errors carry line and column") {
  try {
    load_config_text("{\n  \"mode\": \"simulate\",\n  oops\n}", "cfg.json");
    FAIL("expected a parse error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).rfind("cfg.json:3:", 0) == 0);
  }
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("presets merge with overrides") {
  auto cfg = load_config_text(R"({"preset": "ch3-table", "fleet": {"V": 20}, "seeds": [4, 5]})");
  CHECK(cfg.mode == "sweep");
  CHECK(cfg.doc["fleet"]["V"] == 20);
  CHECK(cfg.doc["fleet"]["p_max"] == 100.0);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{4, 5});
  CHECK_FALSE(cfg.doc.contains("preset"));
}

TEST_CASE("sweep paths fan out over arrays") {
  auto doc = preset("ch3-table");
  auto nodes = resolve_path(doc, "fleet.sus.*.lambda");
  CHECK(nodes.size() == 2u);
  for (auto* n : nodes) *n = 0.007;
  CHECK(doc["fleet"]["sus"][1]["lambda"] == 0.007);
  CHECK(resolve_path(doc, "fleet.nothing").empty());
  doc["sweep"]["parameter"] = "fleet.missing";
  CHECK_FALSE(validate(doc).empty());
}

TEST_CASE("config hash is stable and content sensitive") {
  auto a = preset("ch2-overlay");
  auto b = preset("ch2-overlay");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16u);
  b["overlay"]["k"] = 4;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("worker count honours the environment") {
  unsetenv("CRLAB_THREADS");
  CHECK(worker_count(3) == 3);
  CHECK(worker_count(0) == 1);
  setenv("CRLAB_THREADS", "2", 1);
  CHECK(worker_count(8) == 2);
  setenv("CRLAB_THREADS", "junk", 1);
  CHECK(worker_count(8) == 8);
  unsetenv("CRLAB_THREADS");
}

TEST_CASE("single-point run writes provenance on every row") {
  auto doc = preset("ch2-deadline");
  doc["mode"] = "plan-frame";
  doc["frame"]["frames"] = 2000;
  doc["seeds"] = Json::array({7, 8});
  doc["output_dir"] = scratch("frame").string();
  auto cfg = from_document(doc);
  auto report = run_experiment(cfg, {2, true});
  REQUIRE(report.points.size() == 2u);
  CHECK(report.failures() == 0);
  auto rows = csv::parse(slurp(fs::path(cfg.output_dir) / "point_0002.csv"));
  REQUIRE(rows.size() > 1u);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    CHECK(rows[k][0] == report.hash);
    CHECK(rows[k][1] == "8");
  }
  auto index = csv::parse(slurp(fs::path(cfg.output_dir) / "index.csv"));
  CHECK(index.size() == 3u);
}

TEST_CASE("sweeps are byte-identical across worker counts") {
  auto doc = preset("ch3-table");
  doc["simulate"]["horizon"] = 20000;
  doc["simulate"]["policies"] = Json::array({"DOIC", "SUBOPT"});
  doc["sweep"]["values"] = Json::array({0.002, 0.004});
  doc["output_dir"] = scratch("sweep1").string();
  auto cfg1 = from_document(doc);
  auto r1 = run_experiment(cfg1, {1, true});
  doc["output_dir"] = scratch("sweep2").string();
  auto cfg2 = from_document(doc);
  auto r2 = run_experiment(cfg2, {3, true});
  CHECK(r1.hash == r2.hash);
  for (const char* f : {"point_0001.csv", "point_0002.csv", "index.csv"}) {
    CHECK(slurp(fs::path(cfg1.output_dir) / f) == slurp(fs::path(cfg2.output_dir) / f));
  }
  auto rows = csv::parse(slurp(fs::path(cfg1.output_dir) / "point_0002.csv"));
  CHECK(rows[1][2] == "fleet.sus.*.lambda");
  CHECK(rows[1][3] == "0.004");
}

TEST_CASE("failed points are recorded, not dropped") {
  auto doc = preset("ch2-overlay");
  doc["overlay"]["k"] = 12;  // more channels than the ensemble has
  doc["sweep"]["values"] = Json::array({5.0});
  doc["output_dir"] = scratch("fail").string();
  auto cfg = from_document(doc);
  auto report = run_experiment(cfg, {1, true});
  CHECK(report.failures() == 1);
  auto manifest = Json::parse(slurp(fs::path(cfg.output_dir) / "manifest.json"));
  CHECK(manifest["failures"] == 1);
  CHECK(manifest["points"][0]["status"] == "failed");
  CHECK_FALSE(manifest["points"][0]["error"].get<std::string>().empty());
}

TEST_CASE("empty sweep list runs a single point") {
  auto doc = preset("ch2-overlay");
  doc["sweep"]["values"] = Json::array();
  doc["output_dir"] = scratch("empty").string();
  auto report = run_experiment(from_document(doc), {1, true});
  CHECK(report.points.size() == 1u);
  CHECK(report.points[0].value.empty());
}
