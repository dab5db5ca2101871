#pragma once

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "critlab/loewner.hpp"

namespace critlab {

std::string code_version();

struct ConfigProblem {
  std::string key;
  std::string problem;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<ConfigProblem> problems);
  ConfigError(std::string key, std::string problem)
      : ConfigError(std::vector<ConfigProblem>{{std::move(key), std::move(problem)}}) {}
  const std::vector<ConfigProblem>& problems() const { return problems_; }
  /// {"error": "config", "problems": [{"key": ..., "problem": ...}]}
  nlohmann::json to_json() const;

 private:
  std::vector<ConfigProblem> problems_;
};

const std::vector<std::string>& experiment_names();

struct ExperimentConfig {
  std::string experiment;
  nlohmann::json parameters = nlohmann::json::object();
  std::uint64_t seed = 0;
  int replicas = 1;
  std::string output_path;
};

/// Reads {"experiment", "parameters", "seed", "replicas", "output_path"}, fills parameter
/// defaults and checks every key. Throws ConfigError listing all problems at once.
ExperimentConfig parse_config(const nlohmann::json& doc);
nlohmann::json to_json(const ExperimentConfig& cfg);

struct RunResult {
  nlohmann::json summary;
  std::vector<std::string> files;  // written data files, relative to output_path
  bool passed = true;              // false when a configured check failed
};

/// Runs the experiment, then writes its data files, summary.json and the metadata.json
/// sidecar (the only file holding timestamps) into output_path. Replicas run in seed
/// order and are merged in that order. Nothing is written when the run throws.
RunResult run(const ExperimentConfig& cfg, std::ostream& log);

struct VerifyCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};
/// Fixture regressions and brute-force oracles. Throws std::runtime_error naming a
/// missing fixture file.
std::vector<VerifyCheck> verify(const std::string& fixture_dir);

/// Driving functions of exploration paths k in [first, first + n) on a board of L columns
/// and round(2L / sqrt 3) rows at p = 1/2, mapped to the half-plane and zipped up to
/// capacity t_max.
std::vector<DrivingFunction> percolation_driving(int L, std::uint64_t n, std::uint64_t seed,
                                                 double t_max, std::uint64_t first = 0);
/// Driving functions of n successive spin interfaces of one critical L x L Dobrushin chain.
std::vector<DrivingFunction> ising_interface_driving(int L, std::uint64_t n, std::uint64_t seed,
                                                     std::uint64_t burn_in, std::uint64_t thin,
                                                     double t_max, std::uint64_t chain = 0);

}  // namespace critlab
