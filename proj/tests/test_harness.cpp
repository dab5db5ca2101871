#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "critlab/harness.hpp"

using namespace critlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("critlab_test_harness_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Data rows of a CSV, without the provenance lines.
std::vector<std::string> data_rows(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::vector<std::string> rows;
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != '#') rows.push_back(line);
  return rows;
}

std::vector<std::string> problem_keys(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    std::vector<std::string> keys;
    for (const auto& p : e.problems()) keys.push_back(p.key);
    return keys;
  }
  return {};
}

json sweep_doc(const fs::path& out, int n) {
  return {{"experiment", "crossing_sweep"},
          {"seed", 11},
          {"output_path", out.string()},
          {"parameters",
           {{"model", {{"lattice", "triangular"}, {"mode", "site"}, {"p", "critical"}}},
            {"r", {0.5, 1.0, 2.0}},
            {"short_side", 12},
            {"n", n}}}};
}

std::ostringstream sink;

}  // namespace

TEST_CASE("config: every problem is reported at once") {
  const json doc = {{"experiment", "crossing_sweep"},
                    {"seed", -3},
                    {"output_path", "x"},
                    {"colour", "red"},
                    {"parameters", {{"r", {0.5, "a"}}, {"n", 0}, {"bogus", 1}}}};
  const auto keys = problem_keys(doc);
  const std::set<std::string> got(keys.begin(), keys.end());
  const std::set<std::string> want = {"seed", "colour", "parameters.bogus", "parameters.model", "parameters.r",
                                      "parameters.short_side", "parameters.n"};
  CHECK(got == want);
}

TEST_CASE("config: experiment, seed, replicas and output path") {
  CHECK(problem_keys({{"experiment", "nope"}, {"seed", 1}, {"output_path", "x"}}) ==
        std::vector<std::string>{"experiment"});
  CHECK(problem_keys({{"experiment", "cardy_table"},
                      {"output_path", "x"},
                      {"parameters", {{"r_min", 0.1}, {"r_max", 2}, {"points", 3}}}}) ==
        std::vector<std::string>{"seed"});
  CHECK(problem_keys({{"experiment", "cardy_table"},
                      {"seed", 1},
                      {"replicas", 0},
                      {"output_path", "x"},
                      {"parameters", {{"r_min", 0.1}, {"r_max", 2}, {"points", 3}}}}) ==
        std::vector<std::string>{"replicas"});
  CHECK(problem_keys({{"experiment", "cardy_table"},
                      {"seed", 1},
                      {"parameters", {{"r_min", 2}, {"r_max", 0.1}, {"points", 3}}}}) ==
        std::vector<std::string>{"output_path"});
  CHECK(problem_keys({{"experiment", "cardy_table"},
                      {"seed", 1},
                      {"output_path", "x"},
                      {"parameters", {{"r_min", 2}, {"r_max", 0.1}, {"points", 3}}}}) ==
        std::vector<std::string>{"parameters.r_max"});
  CHECK_THROWS_AS(parse_config(json::array()), ConfigError);
}

TEST_CASE("config: experiment specific checks") {
  json doc = {{"experiment", "kappa_estimate"},
              {"seed", 1},
              {"output_path", "x"},
              {"parameters", {{"source", "sle"}, {"n", 10}, {"t_min", 1e-3}, {"t_max", 1e-2}, {"grid_points", 5}}}};
  const auto keys = problem_keys(doc);
  CHECK(std::set<std::string>(keys.begin(), keys.end()) ==
        std::set<std::string>{"parameters.kappa", "parameters.steps", "parameters.dt"});
  doc["parameters"]["source"] = "magic";
  CHECK(problem_keys(doc) == std::vector<std::string>{"parameters.source"});
  const json bad_model = {{"experiment", "crossing_sweep"},
                          {"seed", 1},
                          {"output_path", "x"},
                          {"parameters",
                           {{"model", {{"lattice", "penrose"}, {"mode", "site"}, {"p", 0.5}}},
                            {"r", {1.0}},
                            {"short_side", 8},
                            {"n", 10}}}};
  CHECK(problem_keys(bad_model) == std::vector<std::string>{"parameters.model"});
  const json target = {{"experiment", "conformal_image"},
                       {"seed", 1},
                       {"output_path", "x"},
                       {"parameters", {{"r", 1.0}, {"target", "sphere"}, {"nx", 2}, {"ny", 2}}}};
  CHECK(problem_keys(target) == std::vector<std::string>{"parameters.target"});
}

TEST_CASE("config: defaults are filled and integral numbers normalized") {
  const ExperimentConfig cfg = parse_config({{"experiment", "ising_observable"},
                                             {"seed", 4},
                                             {"output_path", "x"},
                                             {"parameters", {{"rows", 4}, {"cols", 6}, {"samples", 1e6}}}});
  CHECK(cfg.replicas == 1);
  CHECK(cfg.parameters["samples"].is_number_integer());
  CHECK(cfg.parameters["samples"].get<std::int64_t>() == 1000000);
  CHECK(cfg.parameters["burn_in"].get<int>() == 1000);
  CHECK(cfg.parameters["method"] == "metropolis");
  CHECK(to_json(cfg)["parameters"] == cfg.parameters);
  CHECK(experiment_names().size() == 10);
}

TEST_CASE("run: reruns are byte identical and only the sidecar holds timestamps") {
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  json doc = sweep_doc(a, 300);
  const RunResult ra = run(parse_config(doc), sink);
  doc["output_path"] = b.string();
  run(parse_config(doc), sink);
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(a)) names.insert(e.path().filename().string());
  CHECK(names == std::set<std::string>{"crossing_sweep.csv", "summary.json", "metadata.json"});
  CHECK(ra.files == std::vector<std::string>{"crossing_sweep.csv"});
  // The output path is part of the echoed config; compare everything below the header.
  CHECK(data_rows(a / "crossing_sweep.csv") == data_rows(b / "crossing_sweep.csv"));
  const std::string first = slurp(a / "crossing_sweep.csv");
  CHECK(first.rfind("# code_version: " + code_version() + "\n# config: ", 0) == 0);
  const json meta = json::parse(slurp(a / "metadata.json"));
  CHECK(meta.contains("started_utc"));
  CHECK(slurp(a / "summary.json").find("utc") == std::string::npos);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("run: identical config into the same directory gives identical bytes") {
  for (const json& params :
       {json{{"experiment", "cardy_table"}, {"parameters", {{"r_min", 0.125}, {"r_max", 8}, {"points", 13}}}},
        json{{"experiment", "ising_observable"}, {"parameters", {{"rows", 3}, {"cols", 4}, {"samples", 2000}, {"burn_in", 100}}}},
        json{{"experiment", "kappa_estimate"},
             {"parameters",
              {{"source", "sle"}, {"kappa", 4}, {"steps", 200}, {"dt", 1e-3}, {"n", 50}, {"t_min", 0.01},
               {"t_max", 0.2}, {"grid_points", 6}, {"bootstrap", 20}}}}}) {
    const fs::path dir = scratch("same_" + params["experiment"].get<std::string>());
    json doc = params;
    doc["seed"] = 5;
    doc["replicas"] = 2;
    doc["output_path"] = dir.string();
    const ExperimentConfig cfg = parse_config(doc);
    const RunResult r1 = run(cfg, sink);
    std::vector<std::string> before;
    for (const auto& f : r1.files) before.push_back(slurp(dir / f));
    before.push_back(slurp(dir / "summary.json"));
    const RunResult r2 = run(cfg, sink);
    std::vector<std::string> after;
    for (const auto& f : r2.files) after.push_back(slurp(dir / f));
    after.push_back(slurp(dir / "summary.json"));
    CHECK(before == after);
    fs::remove_all(dir);
  }
}

TEST_CASE("run: four replicas merge to the single run with four times the samples") {
  const fs::path a = scratch("rep4"), b = scratch("rep1");
  json doc = sweep_doc(a, 150);
  doc["replicas"] = 4;
  run(parse_config(doc), sink);
  json one = sweep_doc(b, 600);
  run(parse_config(one), sink);
  CHECK(data_rows(a / "crossing_sweep.csv") == data_rows(b / "crossing_sweep.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("run: a failed check clears the passed flag but still writes the data") {
  const fs::path dir = scratch("check");
  json doc = sweep_doc(dir, 50);
  doc["parameters"]["max_cardy_deviation"] = 0.0;
  const RunResult r = run(parse_config(doc), sink);
  CHECK_FALSE(r.passed);
  CHECK(r.summary["checks"][0]["passed"] == false);
  CHECK(fs::exists(dir / "crossing_sweep.csv"));
  fs::remove_all(dir);
}

TEST_CASE("run: nothing is written when the experiment throws") {
  const fs::path dir = scratch("throws");
  const json doc = {{"experiment", "kappa_estimate"},
                    {"seed", 1},
                    {"output_path", dir.string()},
                    {"parameters",
                     {{"source", "sle"}, {"kappa", 4}, {"steps", 10}, {"dt", 1e-3}, {"n", 5}, {"t_min", 0.01},
                      {"t_max", 0.5}, {"grid_points", 4}}}};
  CHECK_THROWS_AS(run(parse_config(doc), sink), std::invalid_argument);
  CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("verify: every fixture and oracle passes; a missing fixture throws") {
  const auto checks = verify(CRITLAB_FIXTURE_DIR);
  CHECK(checks.size() >= 10);
  for (const auto& c : checks) {
    INFO(c.name << ": " << c.detail);
    CHECK(c.passed);
  }
  CHECK_THROWS_AS(verify("/nonexistent/fixtures"), std::runtime_error);
}

TEST_CASE("driving pipelines are deterministic") {
  const auto a = percolation_driving(16, 3, 2, 0.05, 5);
  const auto b = percolation_driving(16, 1, 2, 0.05, 7);
  REQUIRE(a.size() == 3);
  CHECK(a[2].values == b[0].values);
  CHECK(a[2].curve_id == "path-7");
  const auto c = ising_interface_driving(12, 2, 3, 20, 5, 0.05);
  const auto d = ising_interface_driving(12, 2, 3, 20, 5, 0.05);
  CHECK(c[1].values == d[1].values);
  CHECK(c[0].values != c[1].values);
}
