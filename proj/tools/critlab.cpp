#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "critlab/harness.hpp"

using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kVerifyFailed = 3;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> replicas;
  std::optional<std::string> out;
};

int report_config_error(const critlab::ConfigError& e) {
  std::cerr << e.to_json().dump(2) << "\n";
  return kConfigError;
}

int execute(json doc, const Overrides& ov) {
  if (ov.seed) doc["seed"] = *ov.seed;
  if (ov.replicas) doc["replicas"] = *ov.replicas;
  if (ov.out) doc["output_path"] = *ov.out;
  try {
    const critlab::ExperimentConfig cfg = critlab::parse_config(doc);
    const critlab::RunResult res = critlab::run(cfg, std::cerr);
    std::cout << res.summary.dump(2) << "\n";
    return res.passed ? kOk : kVerifyFailed;
  } catch (const critlab::ConfigError& e) {
    return report_config_error(e);
  } catch (const std::invalid_argument& e) {
    return report_config_error(critlab::ConfigError("parameters", e.what()));
  } catch (const std::domain_error& e) {
    return report_config_error(critlab::ConfigError("parameters", e.what()));
  }
}

int run_config_file(const std::string& experiment, const std::string& path, const Overrides& ov) {
  std::ifstream in(path);
  if (!in) return report_config_error(critlab::ConfigError("--config", "cannot open " + path));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    return report_config_error(critlab::ConfigError("--config", std::string("not valid JSON: ") + e.what()));
  }
  if (!doc.is_object()) return report_config_error(critlab::ConfigError("--config", "must hold a JSON object"));
  if (!doc.contains("experiment")) doc["experiment"] = experiment;
  if (doc["experiment"] != experiment)
    return report_config_error(critlab::ConfigError(
        {{"experiment", "config names " + doc["experiment"].dump() + " but the command is " + experiment}}));
  return execute(std::move(doc), ov);
}

int run_verify(const std::string& fixtures, const std::optional<std::string>& out) {
  std::vector<critlab::VerifyCheck> checks;
  try {
    checks = critlab::verify(fixtures);
  } catch (const std::runtime_error& e) {
    return report_config_error(critlab::ConfigError("fixtures", e.what()));
  }
  bool ok = true;
  json list = json::array();
  for (const auto& c : checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    list.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    ok = ok && c.passed;
  }
  if (out) {
    std::filesystem::create_directories(*out);
    std::ofstream f(std::filesystem::path(*out) / "verify.json");
    f << json{{"code_version", critlab::code_version()}, {"checks", list}, {"passed", ok}}.dump(2) << "\n";
  }
  return ok ? kOk : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"critlab: critical percolation, SLE and Ising experiments"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides ov;
  const auto common = [&](CLI::App* sub) {
    sub->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& v) { ov.seed = v; }, "Base seed");
    sub->add_option_function<int>("--replicas", [&](const int& v) { ov.replicas = v; }, "Number of replicas")
        ->check(CLI::PositiveNumber);
    sub->add_option_function<std::string>("--out", [&](const std::string& v) { ov.out = v; }, "Output directory");
  };

  for (const std::string& name : critlab::experiment_names()) {
    CLI::App* sub = app.add_subcommand(name, "Run the " + name + " experiment");
    sub->add_option("--config", config_path, "JSON config file")->required();
    common(sub);
  }

  std::string fixtures = CRITLAB_FIXTURE_DIR;
  std::optional<std::string> verify_out;
  CLI::App* verify = app.add_subcommand("verify", "Run fixture regressions and brute-force oracles");
  verify->add_option("--fixtures", fixtures, "Fixture directory");
  verify->add_option_function<std::string>("--out", [&](const std::string& v) { verify_out = v; }, "Report directory");

  double kappa = 6.0, dt = 1e-4;
  int steps = 20000, n = 100, stride = 100;
  CLI::App* sle = app.add_subcommand("sle", "SLE shortcuts");
  sle->require_subcommand(1);
  CLI::App* sle_sample = sle->add_subcommand("sample", "Sample chordal SLE traces and driving functions");
  sle_sample->add_option("--kappa", kappa)->capture_default_str();
  sle_sample->add_option("--steps", steps)->capture_default_str();
  sle_sample->add_option("--dt", dt)->capture_default_str();
  sle_sample->add_option("--n", n)->capture_default_str();
  sle_sample->add_option("--stride", stride, "Trace points every stride steps")->capture_default_str();
  common(sle_sample);

  int rows = 16, cols = 32;
  double samples = 1e6;
  int burn_in = 1000;
  CLI::App* ising = app.add_subcommand("ising", "Ising shortcuts");
  ising->require_subcommand(1);
  CLI::App* observable = ising->add_subcommand("observable", "Fermionic observable on a chordal rectangle");
  observable->add_option("--rows", rows)->capture_default_str();
  observable->add_option("--cols", cols)->capture_default_str();
  observable->add_option("--samples", samples)->capture_default_str();
  observable->add_option("--burn-in", burn_in)->capture_default_str();
  common(observable);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  for (const std::string& name : critlab::experiment_names())
    if (app.got_subcommand(name)) return run_config_file(name, config_path, ov);
  if (app.got_subcommand(verify)) return run_verify(fixtures, verify_out);
  if (sle_sample->parsed()) {
    const json doc = {{"experiment", "sle_sample"},
                      {"seed", 0},
                      {"output_path", "critlab_out"},
                      {"parameters", {{"kappa", kappa}, {"steps", steps}, {"dt", dt}, {"n", n}, {"stride", stride}}}};
    return execute(doc, ov);
  }
  if (observable->parsed()) {
    const json doc = {{"experiment", "ising_observable"},
                      {"seed", 0},
                      {"output_path", "critlab_out"},
                      {"parameters", {{"rows", rows}, {"cols", cols}, {"samples", samples}, {"burn_in", burn_in}}}};
    return execute(doc, ov);
  }
  return kOk;
}
