#include "critlab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "critlab/cardy.hpp"
#include "critlab/conformal_maps.hpp"
#include "critlab/crossing.hpp"
#include "critlab/exploration.hpp"
#include "critlab/fk_ising.hpp"
#include "critlab/lattice.hpp"

#ifndef CRITLAB_VERSION
#define CRITLAB_VERSION "0.0.0"
#endif

namespace critlab {

using nlohmann::json;

std::string code_version() { return std::string("critlab ") + CRITLAB_VERSION; }

ConfigError::ConfigError(std::vector<ConfigProblem> problems)
    : std::runtime_error([&] {
        std::string msg = "invalid config:";
        for (const auto& p : problems) msg += " " + p.key + ": " + p.problem + ";";
        return msg;
      }()),
      problems_(std::move(problems)) {}

json ConfigError::to_json() const {
  json list = json::array();
  for (const auto& p : problems_) list.push_back({{"key", p.key}, {"problem", p.problem}});
  return {{"error", "config"}, {"problems", list}};
}

namespace {

// ---------------------------------------------------------------- schema

enum class Kind { integer, number, string, boolean, numbers, integers, object, objects };

struct Key {
  const char* name;
  Kind kind;
  bool required;
  json fallback = nullptr;  // filled in when absent and not required
  double min = -std::numeric_limits<double>::infinity();
};

constexpr double kTiny = std::numeric_limits<double>::min();

const std::map<std::string, std::vector<Key>>& schemas() {
  static const std::map<std::string, std::vector<Key>> s = {
      {"crossing_sweep",
       {{"model", Kind::object, true},
        {"r", Kind::numbers, true, nullptr, kTiny},
        {"short_side", Kind::integer, true, nullptr, 1},
        {"n", Kind::integer, true, nullptr, 1},
        {"p", Kind::number, false, nullptr, 0},
        {"max_cardy_deviation", Kind::number, false, nullptr, 0}}},
      {"universality",
       {{"models", Kind::objects, true},
        {"r", Kind::numbers, true, nullptr, kTiny},
        {"short_side", Kind::integer, true, nullptr, 1},
        {"n", Kind::integer, true, nullptr, 1},
        {"max_abs_z", Kind::number, false, nullptr, 0}}},
      {"conformal_image",
       {{"r", Kind::number, true, nullptr, kTiny},
        {"target", Kind::string, true},
        {"nx", Kind::integer, true, nullptr, 1},
        {"ny", Kind::integer, true, nullptr, 1}}},
      {"cardy_table",
       {{"r_min", Kind::number, true, nullptr, kTiny},
        {"r_max", Kind::number, true, nullptr, kTiny},
        {"points", Kind::integer, true, nullptr, 2}}},
      {"carleson",
       {{"x", Kind::numbers, true, nullptr, 0},
        {"mesh", Kind::number, true, nullptr, kTiny},
        {"n", Kind::integer, true, nullptr, 1},
        {"model", Kind::object, false, {{"lattice", "triangular"}, {"mode", "site"}, {"p", "critical"}}},
        {"max_deviation", Kind::number, false, nullptr, 0}}},
      {"sle_sample",
       {{"kappa", Kind::number, true, nullptr, kTiny},
        {"steps", Kind::integer, true, nullptr, 1},
        {"dt", Kind::number, true, nullptr, kTiny},
        {"n", Kind::integer, true, nullptr, 1},
        {"stride", Kind::integer, false, 100, 1}}},
      {"zipper_roundtrip",
       {{"kappa", Kind::number, true, nullptr, kTiny},
        {"steps", Kind::integer, true, nullptr, 1},
        {"dt", Kind::number, true, nullptr, kTiny},
        {"n", Kind::integer, true, nullptr, 1},
        {"max_relative_error", Kind::number, false, nullptr, 0}}},
      {"kappa_estimate",
       {{"source", Kind::string, true},
        {"n", Kind::integer, true, nullptr, 1},
        {"t_min", Kind::number, true, nullptr, kTiny},
        {"t_max", Kind::number, true, nullptr, kTiny},
        {"grid_points", Kind::integer, true, nullptr, 2},
        {"bootstrap", Kind::integer, false, 200, 0},
        {"kappa", Kind::number, false, nullptr, kTiny},
        {"steps", Kind::integer, false, nullptr, 1},
        {"dt", Kind::number, false, nullptr, kTiny},
        {"L", Kind::integer, false, nullptr, 2},
        {"capacity", Kind::number, false, nullptr, kTiny},
        {"burn_in", Kind::integer, false, nullptr, 0},
        {"thin", Kind::integer, false, nullptr, 1},
        {"kappa_band", Kind::numbers, false},
        {"write_driving", Kind::boolean, false, false}}},
      {"ising_observable",
       {{"rows", Kind::integer, true, nullptr, 1},
        {"cols", Kind::integer, true, nullptr, 1},
        {"samples", Kind::integer, true, nullptr, 1},
        {"burn_in", Kind::integer, false, 1000, 0},
        {"method", Kind::string, false, "metropolis"},
        {"max_phase_bias", Kind::number, false, nullptr, 0}}},
      {"cr_residual",
       {{"sizes", Kind::integers, true, nullptr, 2},
        {"sweeps", Kind::integer, true, nullptr, 1},
        {"batches", Kind::integer, true, nullptr, 2},
        {"burn_in", Kind::integer, false, 1000, 0},
        {"trend_sigma", Kind::number, false, nullptr, 0}}},
  };
  return s;
}

bool integral(const json& v) {
  if (v.is_number_integer()) return true;
  if (!v.is_number_float()) return false;
  const double d = v.get<double>();
  return std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9.0e15;
}

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::integer: return "an integer";
    case Kind::number: return "a number";
    case Kind::string: return "a string";
    case Kind::boolean: return "a boolean";
    case Kind::numbers: return "a non-empty array of numbers";
    case Kind::integers: return "a non-empty array of integers";
    case Kind::object: return "an object";
    case Kind::objects: return "a non-empty array of objects";
  }
  return "";
}

// Checks one present value; integral floats such as 1e6 are normalized to integers.
bool check_value(json& v, const Key& key, std::vector<ConfigProblem>& out, const std::string& path) {
  const auto below = [&](double d) {
    if (d < key.min || (key.min == kTiny && d <= 0.0)) {
      out.push_back({path, key.min == kTiny ? "must be positive" : "must be at least " + json(key.min).dump()});
      return true;
    }
    return false;
  };
  switch (key.kind) {
    case Kind::integer:
      if (!integral(v)) break;
      v = static_cast<std::int64_t>(v.get<double>());
      return !below(v.get<double>());
    case Kind::number:
      if (!v.is_number() || !std::isfinite(v.get<double>())) break;
      return !below(v.get<double>());
    case Kind::string:
      if (!v.is_string()) break;
      return true;
    case Kind::boolean:
      if (!v.is_boolean()) break;
      return true;
    case Kind::numbers:
    case Kind::integers: {
      if (!v.is_array() || v.empty()) break;
      bool ok = true;
      for (auto& e : v) {
        const bool good = key.kind == Kind::integers ? integral(e) : e.is_number() && std::isfinite(e.get<double>());
        if (!good) {
          ok = false;
          continue;
        }
        if (key.kind == Kind::integers) e = static_cast<std::int64_t>(e.get<double>());
        if (below(e.get<double>())) return false;
      }
      if (!ok) break;
      return true;
    }
    case Kind::object:
      if (!v.is_object()) break;
      return true;
    case Kind::objects: {
      if (!v.is_array() || v.empty()) break;
      if (!std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_object(); })) break;
      return true;
    }
  }
  out.push_back({path, std::string("must be ") + kind_name(key.kind)});
  return false;
}

void check_model(const json& m, const std::string& path, std::vector<ConfigProblem>& out) {
  try {
    (void)model_from_json(m);
  } catch (const std::exception& e) {
    out.push_back({path, std::string("invalid model descriptor: ") + e.what()});
  }
}

void check_one_of(const json& params, const char* key, std::initializer_list<const char*> allowed,
                  std::vector<ConfigProblem>& out) {
  if (!params.contains(key) || !params[key].is_string()) return;
  const std::string v = params[key].get<std::string>();
  for (const char* a : allowed)
    if (v == a) return;
  std::string list;
  for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
  out.push_back({std::string("parameters.") + key, "must be one of " + list});
}

void check_experiment(const std::string& name, json& p, std::vector<ConfigProblem>& out) {
  const auto at = [](const char* k) { return std::string("parameters.") + k; };
  if (name == "crossing_sweep" && p.contains("model") && p["model"].is_object()) check_model(p["model"], at("model"), out);
  if (name == "carleson") {
    if (p.contains("model") && p["model"].is_object()) check_model(p["model"], at("model"), out);
    if (p.contains("x") && p["x"].is_array())
      for (const auto& x : p["x"])
        if (x.is_number() && x.get<double>() > 1.0) out.push_back({at("x"), "entries must lie in [0, 1]"});
  }
  if (name == "universality" && p.contains("models") && p["models"].is_array()) {
    if (p["models"].size() < 2) out.push_back({at("models"), "needs at least two models"});
    for (std::size_t m = 0; m < p["models"].size(); ++m)
      if (p["models"][m].is_object()) check_model(p["models"][m], at("models") + "[" + std::to_string(m) + "]", out);
  }
  if (name == "conformal_image") check_one_of(p, "target", {"disk", "halfplane", "strip", "sn_halfplane"}, out);
  if (name == "cardy_table" && p.contains("r_min") && p.contains("r_max") && p["r_min"].is_number() &&
      p["r_max"].is_number() && !(p["r_min"].get<double>() < p["r_max"].get<double>()))
    out.push_back({at("r_max"), "must exceed r_min"});
  if (name == "ising_observable") check_one_of(p, "method", {"metropolis", "exact"}, out);
  if (name == "kappa_estimate") {
    check_one_of(p, "source", {"sle", "percolation", "ising"}, out);
    const std::string src = p.value("source", "");
    const auto need = [&](const char* k) {
      if (!p.contains(k)) out.push_back({at(k), "missing (required for source " + src + ")"});
    };
    const auto fill = [&](const char* k, json v) {
      if (!p.contains(k)) p[k] = std::move(v);
    };
    if (src == "sle") {
      need("kappa"), need("steps"), need("dt");
    } else if (src == "percolation") {
      need("L");
      fill("capacity", 0.06);
    } else if (src == "ising") {
      need("L");
      fill("capacity", 0.06);
      fill("burn_in", 2000);
      fill("thin", 200);
    }
    if (p.contains("kappa_band") && p["kappa_band"].is_array() &&
        !(p["kappa_band"].size() == 2 && p["kappa_band"][0].get<double>() < p["kappa_band"][1].get<double>()))
      out.push_back({at("kappa_band"), "must be [low, high] with low < high"});
    if (p.contains("t_min") && p.contains("t_max") && p["t_min"].is_number() && p["t_max"].is_number() &&
        !(p["t_min"].get<double>() < p["t_max"].get<double>()))
      out.push_back({at("t_max"), "must exceed t_min"});
  }
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "crossing_sweep", "universality", "conformal_image", "cardy_table", "carleson",
      "sle_sample", "zipper_roundtrip", "kappa_estimate", "ising_observable", "cr_residual"};
  return names;
}

ExperimentConfig parse_config(const json& doc) {
  std::vector<ConfigProblem> out;
  if (!doc.is_object()) throw ConfigError("", "config must be a JSON object");
  for (const auto& [k, v] : doc.items())
    if (k != "experiment" && k != "parameters" && k != "seed" && k != "replicas" && k != "output_path")
      out.push_back({k, "unknown key"});

  ExperimentConfig cfg;
  if (!doc.contains("experiment") || !doc["experiment"].is_string()) {
    out.push_back({"experiment", "missing or not a string"});
  } else {
    cfg.experiment = doc["experiment"].get<std::string>();
    if (!schemas().count(cfg.experiment)) out.push_back({"experiment", "unknown experiment '" + cfg.experiment + "'"});
  }
  if (!doc.contains("seed")) {
    out.push_back({"seed", "missing"});
  } else if (!doc["seed"].is_number_unsigned() && !(integral(doc["seed"]) && doc["seed"].get<double>() >= 0)) {
    out.push_back({"seed", "must be a non-negative integer"});
  } else {
    cfg.seed = doc["seed"].is_number_unsigned() ? doc["seed"].get<std::uint64_t>()
                                                : static_cast<std::uint64_t>(doc["seed"].get<double>());
  }
  if (doc.contains("replicas")) {
    if (!integral(doc["replicas"]) || doc["replicas"].get<double>() < 1)
      out.push_back({"replicas", "must be an integer >= 1"});
    else
      cfg.replicas = static_cast<int>(doc["replicas"].get<double>());
  }
  if (!doc.contains("output_path")) {
    out.push_back({"output_path", "missing"});
  } else if (!doc["output_path"].is_string() || doc["output_path"].get<std::string>().empty()) {
    out.push_back({"output_path", "must be a non-empty string"});
  } else {
    cfg.output_path = doc["output_path"].get<std::string>();
  }

  json params = doc.value("parameters", json::object());
  if (!params.is_object()) {
    out.push_back({"parameters", "must be an object"});
    params = json::object();
  }
  const auto it = schemas().find(cfg.experiment);
  if (it != schemas().end()) {
    for (const auto& [k, v] : params.items())
      if (std::none_of(it->second.begin(), it->second.end(), [&](const Key& key) { return k == key.name; }))
        out.push_back({"parameters." + k, "unknown key"});
    for (const Key& key : it->second) {
      const std::string path = std::string("parameters.") + key.name;
      if (!params.contains(key.name)) {
        if (key.required)
          out.push_back({path, "missing"});
        else if (!key.fallback.is_null())
          params[key.name] = key.fallback;
        continue;
      }
      check_value(params[key.name], key, out, path);
    }
    if (out.empty()) check_experiment(cfg.experiment, params, out);
  }
  if (!out.empty()) throw ConfigError(std::move(out));
  cfg.parameters = std::move(params);
  return cfg;
}

json to_json(const ExperimentConfig& cfg) {
  return {{"experiment", cfg.experiment},
          {"parameters", cfg.parameters},
          {"seed", cfg.seed},
          {"replicas", cfg.replicas},
          {"output_path", cfg.output_path}};
}

// ---------------------------------------------------------------- pipelines

std::vector<DrivingFunction> percolation_driving(int L, std::uint64_t n, std::uint64_t seed, double t_max,
                                                 std::uint64_t first) {
  const HexBoard board(L, static_cast<int>(std::lround(2.0 * L / std::sqrt(3.0))));
  std::vector<DrivingFunction> out;
  out.reserve(n);
  for (std::uint64_t k = first; k < first + n; ++k) {
    const ExplorationPath path = explore(board, 0.5, seed, k);
    out.push_back(extract_driving(path_to_halfplane(path, board), 0, "path-" + std::to_string(k), t_max).driving);
  }
  return out;
}

std::vector<DrivingFunction> ising_interface_driving(int L, std::uint64_t n, std::uint64_t seed,
                                                     std::uint64_t burn_in, std::uint64_t thin, double t_max,
                                                     std::uint64_t chain) {
  DobrushinBox box(L, L, critical_beta(), seed, chain);
  box.sweep(burn_in);
  std::vector<DrivingFunction> out;
  out.reserve(n);
  for (std::uint64_t k = 0; k < n; ++k) {
    box.sweep(thin);
    const std::string id = "interface-" + std::to_string(chain) + "-" + std::to_string(k);
    out.push_back(extract_driving(box.interface_halfplane(), 0, id, t_max).driving);
  }
  return out;
}

namespace {

// ---------------------------------------------------------------- output helpers

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

struct Output {
  explicit Output(const ExperimentConfig& c) : cfg(c) {}

  const ExperimentConfig& cfg;
  json seeds = json::array();
  std::vector<std::pair<std::string, std::string>> files;
  json results = json::object();
  json checks = json::array();
  bool passed = true;

  std::string provenance_lines() const {
    return "# code_version: " + code_version() + "\n# config: " + to_json(cfg).dump() +
           "\n# seeds: " + seeds.dump() + "\n";
  }
  json provenance() const {
    return {{"code_version", code_version()}, {"config", to_json(cfg)}, {"seeds", seeds}};
  }
  /// CSV with the provenance lines in front of `body` (which starts with its header row).
  void csv(const std::string& name, const std::string& body) { files.emplace_back(name, provenance_lines() + body); }
  void json_file(const std::string& name, json body) {
    body["provenance"] = provenance();
    files.emplace_back(name, body.dump(2) + "\n");
  }
  void check(const std::string& name, bool ok, double value, double limit) {
    checks.push_back({{"name", name}, {"passed", ok}, {"value", value}, {"limit", limit}});
    passed = passed && ok;
  }
};

std::uint64_t count(const json& p, const char* k) { return p.at(k).get<std::uint64_t>(); }

std::string estimate_row(double r, double p, double delta_or_l, const CrossingEstimate& e,
                         const PercolationModel& model, std::uint64_t seed) {
  const json mj = model_to_json(model);
  return num(r) + "," + num(p) + "," + num(delta_or_l) + "," + std::to_string(e.n_samples) + "," + num(e.p_hat()) +
         "," + num(e.std_err()) + "," + mj.value("lattice", "") + "," + mj.value("mode", "") + "," +
         std::to_string(seed) + "\n";
}

void replica_schedule(Output& o, std::uint64_t seed, int replicas, std::uint64_t n, const std::string& tag = "") {
  for (int i = 0; i < replicas; ++i) {
    json s = {{"replica", i}, {"seed", seed}, {"first_sample", n * i}, {"samples", n}};
    if (!tag.empty()) s["stream"] = tag;
    o.seeds.push_back(s);
  }
}

// ---------------------------------------------------------------- experiments

void crossing_sweep(Output& o, std::ostream& log) {
  const auto& p = o.cfg.parameters;
  const PercolationModel model = model_from_json(p["model"]);
  const auto r_list = p["r"].get<std::vector<double>>();
  const int side = p["short_side"].get<int>();
  const std::uint64_t n = count(p, "n");
  const std::optional<double> prob = p.contains("p") ? std::optional<double>(p["p"].get<double>()) : std::nullopt;
  replica_schedule(o, o.cfg.seed, o.cfg.replicas, n);
  std::vector<AspectRow> merged;
  for (int i = 0; i < o.cfg.replicas; ++i) {
    EstimateOptions opt;
    opt.first_sample = n * i;
    const auto rows = sweep_aspect(model, r_list, side, prob, n, o.cfg.seed, opt);
    if (merged.empty()) {
      merged = rows;
    } else {
      for (std::size_t k = 0; k < rows.size(); ++k) merged[k].estimate = merge(merged[k].estimate, rows[k].estimate);
    }
    log << "[crossing_sweep] replica " << i + 1 << "/" << o.cfg.replicas << " done\n";
  }
  std::string body = "r,p,delta_or_L,n,p_hat,std_err,lattice,mode,seed\n";
  double max_dev = 0.0;
  json rows = json::array();
  for (const AspectRow& row : merged) {
    body += estimate_row(row.r, row.p, row.short_side, row.estimate, model, o.cfg.seed);
    const double dev = std::abs(row.estimate.p_hat() - cardy(row.r));
    max_dev = std::max(max_dev, dev);
    rows.push_back({{"r", row.r}, {"p_hat", row.estimate.p_hat()}, {"std_err", row.estimate.std_err()},
                    {"n", row.estimate.n_samples}, {"cardy", cardy(row.r)}});
  }
  o.csv("crossing_sweep.csv", body);
  o.results = {{"rows", rows}, {"max_cardy_deviation", max_dev}};
  if (p.contains("max_cardy_deviation"))
    o.check("max_cardy_deviation", max_dev < p["max_cardy_deviation"].get<double>(), max_dev,
            p["max_cardy_deviation"].get<double>());
}

void universality(Output& o, std::ostream& log) {
  const auto& p = o.cfg.parameters;
  std::vector<PercolationModel> models;
  for (const auto& m : p["models"]) models.push_back(model_from_json(m));
  const auto r_list = p["r"].get<std::vector<double>>();
  const int side = p["short_side"].get<int>();
  const std::uint64_t n = count(p, "n");
  for (std::size_t m = 0; m < models.size(); ++m)
    replica_schedule(o, stream_key(o.cfg.seed, m), o.cfg.replicas, n, "model " + std::to_string(m));
  // est[m][k]: model m, aspect k, merged over replicas in order.
  std::vector<std::vector<CrossingEstimate>> est(models.size());
  for (std::size_t m = 0; m < models.size(); ++m) {
    const std::uint64_t seed = stream_key(o.cfg.seed, m);
    for (double r : r_list) {
      const Triplet t = rectangle_triplet(1.0, r);
      const double mesh = rectangle_mesh(r, side);
      const DiscreteTriplet dt = rasterize(t, models[m], mesh);
      CrossingEstimate total;
      for (int i = 0; i < o.cfg.replicas; ++i) {
        EstimateOptions opt;
        opt.first_sample = n * i;
        const CrossingEstimate e = estimate_crossing(models[m], dt, n, seed, opt);
        total = i == 0 ? e : merge(total, e);
      }
      est[m].push_back(total);
      log << "[universality] model " << m << " r=" << r << " p_hat=" << total.p_hat() << "\n";
    }
  }
  std::string body = "model,r,p,delta_or_L,n,p_hat,std_err,lattice,mode,seed\n";
  for (std::size_t k = 0; k < r_list.size(); ++k)
    for (std::size_t m = 0; m < models.size(); ++m)
      body += std::to_string(m) + "," +
              estimate_row(r_list[k], models[m].open_prob().front(), side, est[m][k], models[m], stream_key(o.cfg.seed, m));
  o.csv("universality.csv", body);
  std::string pairs = "r,model_a,model_b,z\n";
  double max_z = 0.0;
  for (std::size_t k = 0; k < r_list.size(); ++k)
    for (std::size_t a = 0; a < models.size(); ++a)
      for (std::size_t b = a + 1; b < models.size(); ++b) {
        const double z = z_score(est[a][k], est[b][k]);
        max_z = std::max(max_z, std::abs(z));
        pairs += num(r_list[k]) + "," + std::to_string(a) + "," + std::to_string(b) + "," + num(z) + "\n";
      }
  o.csv("universality_pairs.csv", pairs);
  o.results = {{"max_abs_z", max_z}, {"models", p["models"]}};
  if (p.contains("max_abs_z"))
    o.check("max_abs_z", max_z < p["max_abs_z"].get<double>(), max_z, p["max_abs_z"].get<double>());
}

void conformal_image(Output& o, std::ostream&) {
  const auto& p = o.cfg.parameters;
  const double r = p["r"].get<double>();
  const std::string name = p["target"].get<std::string>();
  const MapTarget target = name == "disk"        ? MapTarget::disk
                           : name == "halfplane" ? MapTarget::halfplane
                           : name == "strip"     ? MapTarget::strip
                                                 : MapTarget::sn_halfplane;
  const RectangleConformalMap map(1.0, r, target);
  const int nx = p["nx"].get<int>(), ny = p["ny"].get<int>();
  std::string body = "x,y,re,im,dre,dim\n";
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const Complex z((i + 0.5) / nx, (j + 0.5) * r / ny);
      const MapValue v = map(z);
      body += num(z.real()) + "," + num(z.imag()) + "," + num(v.w.real()) + "," + num(v.w.imag()) + "," +
              num(v.dw.real()) + "," + num(v.dw.imag()) + "\n";
    }
  o.csv("conformal_image.csv", body);
  json corners = json::array();
  for (const Complex c : map.corner_images())
    corners.push_back(std::isfinite(std::abs(c)) ? json{c.real(), c.imag()} : json("infinity"));
  o.results = {{"points", nx * ny}, {"corner_images_bl_br_tr_tl", corners}, {"modulus_k", map.modulus().k}};
}

void cardy_table(Output& o, std::ostream&) {
  const auto& p = o.cfg.parameters;
  const double lo = p["r_min"].get<double>(), hi = p["r_max"].get<double>();
  const int n = p["points"].get<int>();
  std::string body = "r,eta,cardy\n";
  for (int k = 0; k < n; ++k) {
    const double r = k == n - 1 ? hi : lo * std::pow(hi / lo, static_cast<double>(k) / (n - 1));
    body += num(r) + "," + num(theta_of_r(r).eta) + "," + num(cardy(r)) + "\n";
  }
  o.csv("cardy_table.csv", body);
  o.results = {{"points", n}, {"cardy_at_1", cardy(1.0)}};
}

void carleson(Output& o, std::ostream& log) {
  const auto& p = o.cfg.parameters;
  const PercolationModel model = model_from_json(p["model"]);
  const double mesh = p["mesh"].get<double>();
  const std::uint64_t n = count(p, "n");
  replica_schedule(o, o.cfg.seed, o.cfg.replicas, n);
  std::string body = "x,p,delta_or_L,n,p_hat,std_err,lattice,mode,seed,exact\n";
  double max_dev = 0.0;
  json rows = json::array();
  for (double x : p["x"].get<std::vector<double>>()) {
    const DiscreteTriplet dt = rasterize(carleson_triplet(x), model, mesh);
    CrossingEstimate total;
    for (int i = 0; i < o.cfg.replicas; ++i) {
      EstimateOptions opt;
      opt.first_sample = n * i;
      const CrossingEstimate e = estimate_crossing(model, dt, n, o.cfg.seed, opt);
      total = i == 0 ? e : merge(total, e);
    }
    const double exact = carleson_triangle(x);
    max_dev = std::max(max_dev, std::abs(total.p_hat() - exact));
    const std::string row = estimate_row(x, model.open_prob().front(), mesh, total, model, o.cfg.seed);
    body += row.substr(0, row.size() - 1) + "," + num(exact) + "\n";
    rows.push_back({{"x", x}, {"p_hat", total.p_hat()}, {"std_err", total.std_err()}, {"exact", exact}});
    log << "[carleson] x=" << x << " p_hat=" << total.p_hat() << "\n";
  }
  o.csv("carleson.csv", body);
  o.results = {{"rows", rows}, {"max_deviation", max_dev}};
  if (p.contains("max_deviation"))
    o.check("max_deviation", max_dev < p["max_deviation"].get<double>(), max_dev, p["max_deviation"].get<double>());
}

void sle_sample(Output& o, std::ostream& log) {
  const auto& p = o.cfg.parameters;
  const double kappa = p["kappa"].get<double>(), dt = p["dt"].get<double>();
  const int steps = p["steps"].get<int>(), stride = p["stride"].get<int>();
  const std::uint64_t n = count(p, "n");
  replica_schedule(o, o.cfg.seed, o.cfg.replicas, n);
  std::vector<Trace> traces;
  std::vector<DrivingFunction> driving;
  for (int i = 0; i < o.cfg.replicas; ++i) {
    for (std::uint64_t k = n * i; k < n * (i + 1); ++k) {
      traces.push_back(sample_sle(kappa, steps, dt, o.cfg.seed, k, stride));
      driving.push_back(traces.back().driving);
    }
    log << "[sle_sample] replica " << i + 1 << "/" << o.cfg.replicas << " done\n";
  }
  std::ostringstream d, t;
  write_driving_csv(d, driving);
  write_trace_csv(t, traces);
  o.csv("driving.csv", d.str());
  o.csv("trace.csv", t.str());
  double sup_im = 0.0;
  for (const Trace& tr : traces)
    for (const Complex z : tr.points) sup_im = std::max(sup_im, z.imag());
  o.results = {{"curves", traces.size()}, {"final_time", steps * dt}, {"max_height", sup_im}};
}

void zipper_roundtrip(Output& o, std::ostream& log) {
  const auto& p = o.cfg.parameters;
  const double kappa = p["kappa"].get<double>(), dt = p["dt"].get<double>();
  const int steps = p["steps"].get<int>();
  const std::uint64_t n = count(p, "n");
  replica_schedule(o, o.cfg.seed, o.cfg.replicas, n);
  std::string body = "curve_id,points,skipped,sup_error,sup_xi,relative_error\n";
  double worst = 0.0;
  for (int i = 0; i < o.cfg.replicas; ++i)
    for (std::uint64_t k = n * i; k < n * (i + 1); ++k) {
      const Trace tr = sample_sle(kappa, steps, dt, o.cfg.seed, k);
      const ZipperReport rep = extract_driving(tr.points, 0, tr.driving.curve_id);
      double err = 0.0, sup = 0.0;
      const std::size_t m = std::min(rep.driving.values.size(), tr.driving.values.size());
      for (std::size_t j = 0; j < tr.driving.values.size(); ++j) sup = std::max(sup, std::abs(tr.driving.values[j]));
      for (std::size_t j = 1; j < m; ++j) err = std::max(err, std::abs(rep.driving.values[j] - tr.driving.values[j]));
      if (m < tr.driving.values.size()) err = std::numeric_limits<double>::infinity();
      const double rel = sup > 0 ? err / sup : err;
      worst = std::max(worst, rel);
      body += tr.driving.curve_id + "," + std::to_string(tr.points.size()) + "," + std::to_string(rep.skipped) +
              "," + num(err) + "," + num(sup) + "," + num(rel) + "\n";
      log << "[zipper_roundtrip] " << tr.driving.curve_id << " relative error " << rel << "\n";
    }
  o.csv("zipper_roundtrip.csv", body);
  o.results = {{"max_relative_error", worst}};
  if (p.contains("max_relative_error"))
    o.check("max_relative_error", worst < p["max_relative_error"].get<double>(), worst,
            p["max_relative_error"].get<double>());
}

void kappa_estimate(Output& o, std::ostream& log) {
  const auto& p = o.cfg.parameters;
  const std::string src = p["source"].get<std::string>();
  const std::uint64_t n = count(p, "n");
  std::vector<DrivingFunction> ens;
  double quantum = 0.0;
  for (int i = 0; i < o.cfg.replicas; ++i) {
    std::vector<DrivingFunction> part;
    if (src == "sle") {
      quantum = p["dt"].get<double>();
      for (std::uint64_t k = n * i; k < n * (i + 1); ++k)
        part.push_back(sample_driving(p["kappa"].get<double>(), p["steps"].get<int>(), quantum, o.cfg.seed, k));
      o.seeds.push_back({{"replica", i}, {"seed", o.cfg.seed}, {"first_curve", n * i}, {"curves", n}});
    } else if (src == "percolation") {
      part = percolation_driving(p["L"].get<int>(), n, o.cfg.seed, p["capacity"].get<double>(), n * i);
      o.seeds.push_back({{"replica", i}, {"seed", o.cfg.seed}, {"first_path", n * i}, {"paths", n}});
    } else {
      part = ising_interface_driving(p["L"].get<int>(), n, o.cfg.seed, count(p, "burn_in"), count(p, "thin"),
                                     p["capacity"].get<double>(), i);
      o.seeds.push_back({{"replica", i}, {"seed", o.cfg.seed}, {"chain", i}, {"interfaces", n}});
    }
    ens.insert(ens.end(), part.begin(), part.end());
    log << "[kappa_estimate] replica " << i + 1 << "/" << o.cfg.replicas << ": " << ens.size() << " curves\n";
  }
  const auto grid = geometric_grid(p["t_min"].get<double>(), p["t_max"].get<double>(), p["grid_points"].get<int>(),
                                   quantum);
  const KappaEstimate e = estimate_kappa(ens, grid, o.cfg.seed, p["bootstrap"].get<int>(), 1);
  std::string body = "t,variance,variance_over_t\n";
  for (std::size_t k = 0; k < e.grid.size(); ++k)
    body += num(e.grid[k]) + "," + num(e.variance[k]) + "," + num(e.variance[k] / e.grid[k]) + "\n";
  o.csv("kappa_profile.csv", body);
  if (p["write_driving"].get<bool>()) {
    std::ostringstream d;
    write_driving_csv(d, ens);
    o.csv("driving.csv", d.str());
  }
  double min_final = std::numeric_limits<double>::infinity();
  for (const auto& xi : ens) min_final = std::min(min_final, xi.final_time());
  o.results = {{"kappa", e.kappa},
               {"ci_low", e.ci_low},
               {"ci_high", e.ci_high},
               {"curves", e.n_curves},
               {"skewness", e.skewness},
               {"excess_kurtosis", e.excess_kurtosis},
               {"lag1_correlation", e.lag1_correlation},
               {"markov_correlation", e.markov_correlation},
               {"min_final_time", min_final}};
  if (p.contains("kappa_band")) {
    const double lo = p["kappa_band"][0].get<double>(), hi = p["kappa_band"][1].get<double>();
    const bool ok = e.kappa >= lo && e.kappa <= hi;
    o.checks.push_back({{"name", "kappa_band"}, {"passed", ok}, {"value", e.kappa}, {"limit", p["kappa_band"]}});
    o.passed = o.passed && ok;
  }
}

void ising_observable(Output& o, std::ostream& log) {
  const auto& p = o.cfg.parameters;
  const TileDomain dom = TileDomain::rectangle_chordal(p["rows"].get<int>(), p["cols"].get<int>());
  const std::uint64_t n = count(p, "samples");
  Observable f;
  json loops;
  if (p["method"].get<std::string>() == "exact") {
    f = smirnov_observable_exact(dom);
    o.seeds.push_back({{"replica", 0}, {"seed", nullptr}, {"method", "exact"}});
    loops = {{"method", "exact"}};
  } else {
    LoopEnsembleOptions opt;
    opt.burn_in_sweeps = count(p, "burn_in");
    std::vector<Complex> sum(dom.side_count());
    std::vector<double> visits(dom.side_count());
    std::vector<std::uint64_t> hist;
    std::uint64_t accepted = 0, proposed = 0;
    double total = 0.0;
    for (int i = 0; i < o.cfg.replicas; ++i) {
      const std::uint64_t seed = stream_key(o.cfg.seed, i);
      ObservableAccumulator acc(dom);
      const LoopChain chain = sample_critical_loops(dom, n, seed, opt, [&](const LoopConfiguration& c) { acc.add(c); });
      const Observable part = acc.result();
      for (int s = 0; s < dom.side_count(); ++s) {
        sum[s] += part.values[s] * part.n_samples;
        visits[s] += part.visits[s] * part.n_samples;
      }
      total += part.n_samples;
      accepted += chain.accepted;
      proposed += chain.proposed;
      if (hist.size() < chain.loop_histogram.size()) hist.resize(chain.loop_histogram.size(), 0);
      for (std::size_t b = 0; b < chain.loop_histogram.size(); ++b) hist[b] += chain.loop_histogram[b];
      o.seeds.push_back({{"replica", i}, {"seed", seed}, {"samples", n}, {"burn_in_sweeps", opt.burn_in_sweeps}});
      log << "[ising_observable] replica " << i + 1 << "/" << o.cfg.replicas << " acceptance "
          << (chain.proposed ? static_cast<double>(chain.accepted) / chain.proposed : 0.0) << "\n";
    }
    f.values.resize(dom.side_count());
    f.visits.resize(dom.side_count());
    for (int s = 0; s < dom.side_count(); ++s) {
      f.values[s] = sum[s] / total;
      f.visits[s] = visits[s] / total;
    }
    f.n_samples = total;
    loops = {{"method", "metropolis"},
             {"b_histogram", hist},
             {"accepted", accepted},
             {"proposed", proposed},
             {"acceptance_rate", proposed ? static_cast<double>(accepted) / proposed : 0.0}};
  }
  std::ostringstream csv;
  write_observable_csv(csv, dom, f);
  o.csv("observable.csv", csv.str());
  o.json_file("loops.json", loops);
  const CrResidual cr = discrete_cr_residual(dom, f);
  o.results = {{"samples", f.n_samples}, {"cr_rms", cr.rms}, {"cr_max_abs", cr.max_abs}, {"cr_tiles", dom.tile_count() - static_cast<int>(cr.skipped)}};
  try {
    const StripComparison s = compare_to_strip(dom, f);
    o.results["strip_phase_bias"] = s.mean_abs_phase;
    o.results["strip_modulus_ratio"] = s.modulus_ratio;
    o.results["strip_tiles"] = s.tiles;
    if (p.contains("max_phase_bias"))
      o.check("max_phase_bias", s.mean_abs_phase < p["max_phase_bias"].get<double>(), s.mean_abs_phase,
              p["max_phase_bias"].get<double>());
  } catch (const std::exception& e) {
    o.results["strip_phase_bias"] = nullptr;
    if (p.contains("max_phase_bias")) o.check("max_phase_bias", false, std::nan(""), p["max_phase_bias"].get<double>());
  }
}

void cr_residual(Output& o, std::ostream& log) {
  const auto& p = o.cfg.parameters;
  const std::uint64_t sweeps = count(p, "sweeps");
  const int batches = p["batches"].get<int>() * o.cfg.replicas;
  for (int b = 0; b < batches; ++b)
    o.seeds.push_back({{"batch", b}, {"seed", stream_key(o.cfg.seed, b)}, {"sweeps", sweeps}});
  std::string body = "size,tiles,sweeps,rms,noise_rms,systematic_sq,systematic_sq_se\n";
  std::vector<CrNoiseSplit> rows;
  json out = json::array();
  for (int size : p["sizes"].get<std::vector<int>>()) {
    const TileDomain dom = TileDomain::rectangle_chordal(size, size);
    const CrNoiseSplit s = cr_residual_batches(dom, sweeps, batches, o.cfg.seed, count(p, "burn_in"));
    rows.push_back(s);
    body += std::to_string(size) + "," + std::to_string(s.tiles) + "," + std::to_string(s.sweeps) + "," + num(s.rms) +
            "," + num(s.noise_rms) + "," + num(s.systematic_sq) + "," + num(s.systematic_sq_se) + "\n";
    out.push_back({{"size", size}, {"rms", s.rms}, {"noise_rms", s.noise_rms}, {"systematic_sq", s.systematic_sq},
                   {"systematic_sq_se", s.systematic_sq_se}});
    log << "[cr_residual] size " << size << " rms " << s.rms << " noise " << s.noise_rms << "\n";
  }
  o.csv("cr_residual.csv", body);
  o.results = {{"rows", out}};
  if (p.contains("trend_sigma")) {
    const double k = p["trend_sigma"].get<double>();
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double se = std::hypot(rows[i].systematic_sq_se, rows[i - 1].systematic_sq_se);
      worst = std::max(worst, (rows[i].systematic_sq - rows[i - 1].systematic_sq) / (se > 0 ? se : 1.0));
    }
    o.check("non_increasing_within_sigma", rows.size() < 2 || worst <= k, worst, k);
  }
}

using Runner = void (*)(Output&, std::ostream&);

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> r = {
      {"crossing_sweep", crossing_sweep}, {"universality", universality},
      {"conformal_image", conformal_image}, {"cardy_table", cardy_table},
      {"carleson", carleson},             {"sle_sample", sle_sample},
      {"zipper_roundtrip", zipper_roundtrip}, {"kappa_estimate", kappa_estimate},
      {"ising_observable", ising_observable}, {"cr_residual", cr_residual}};
  return r;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

RunResult run(const ExperimentConfig& cfg, std::ostream& log) {
  const auto it = runners().find(cfg.experiment);
  if (it == runners().end()) throw ConfigError("experiment", "unknown experiment '" + cfg.experiment + "'");
  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  Output o(cfg);
  it->second(o, log);

  RunResult res;
  res.passed = o.passed;
  json files = json::array();
  for (const auto& f : o.files) {
    res.files.push_back(f.first);
    files.push_back(f.first);
  }
  res.summary = {{"experiment", cfg.experiment}, {"results", o.results}, {"checks", o.checks},
                 {"passed", o.passed},          {"files", files},       {"provenance", o.provenance()}};
  o.files.emplace_back("summary.json", res.summary.dump(2) + "\n");

  namespace fs = std::filesystem;
  const fs::path dir(cfg.output_path);
  fs::create_directories(dir);
  const auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream out(dir / name, std::ios::binary);
    out << body;
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  };
  for (const auto& f : o.files) write(f.first, f.second);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write("metadata.json", json{{"started_utc", started}, {"finished_utc", utc_now()}, {"wall_seconds", wall},
                              {"code_version", code_version()}}
                                 .dump(2) +
                             "\n");
  return res;
}

// ---------------------------------------------------------------- verify

namespace {

json load_fixture(const std::string& dir, const std::string& name) {
  std::ifstream in(dir + "/" + name);
  if (!in) throw std::runtime_error("missing fixture file " + dir + "/" + name);
  return json::parse(in);
}

BoundaryArc arc_of(const json& a) {
  return {a[0].get<int>(), a[1].get<double>(), a[2].get<int>(), a[3].get<double>()};
}

LoopConfiguration tiles_from_rows(const TileDomain& dom, const std::vector<std::string>& rows) {
  LoopConfiguration cfg{&dom, std::vector<std::uint8_t>(dom.tile_count())};
  if (static_cast<int>(rows.size()) != dom.rows()) throw std::runtime_error("fixture rows do not match the domain");
  for (int r = 0; r < dom.rows(); ++r)
    for (int x = 0; x < dom.cols(); ++x) cfg.tiles[(dom.rows() - 1 - r) * dom.cols() + x] = rows[r].at(x) == 'B';
  return cfg;
}

std::vector<std::uint8_t> mask_bits(std::uint64_t mask, int n) {
  std::vector<std::uint8_t> s(n);
  for (int k = 0; k < n; ++k) s[k] = (mask >> k) & 1;
  return s;
}

}  // namespace

std::vector<VerifyCheck> verify(const std::string& dir) {
  std::vector<VerifyCheck> out;
  const auto add = [&](std::string name, bool ok, std::string detail) {
    out.push_back({std::move(name), ok, std::move(detail)});
  };

  {
    const json fx = load_fixture(dir, "fig1.json");
    const int cells = fx.at("cells").get<int>();
    Polygon poly;
    for (const auto& v : fx.at("polygon")) poly.push_back({v[0].get<double>(), v[1].get<double>()});
    const auto rows = fx.at("rows_top_first").get<std::vector<std::string>>();
    const PeriodicGraph g = build_graph(LatticeKind::square, 1.0 / cells);
    const auto decide = [&](const char* a, const char* b) {
      const DiscreteTriplet dt = rasterize(Triplet{poly, arc_of(fx["arcs"][a]), arc_of(fx["arcs"][b]), "fixture"}, g);
      std::vector<std::uint8_t> status;
      for (const SiteRef& s : dt.sites) status.push_back(rows.at(cells - s.j).at(s.i) == '#' ? 1 : 0);
      return has_crossing(dt, PercolationMode::site, status);
    };
    const bool ij = decide("I", "J"), ij2 = decide("I_prime", "J_prime");
    add("fig1 crossing I-J", ij == fx["crossing"]["I_J"].get<bool>(), "crossing " + std::string(ij ? "true" : "false"));
    add("fig1 crossing I'-J'", ij2 == fx["crossing"]["I_prime_J_prime"].get<bool>(),
        "crossing " + std::string(ij2 ? "true" : "false"));
  }

  for (const char* name : {"fig5_left.json", "fig5_right.json"}) {
    const json fx = load_fixture(dir, name);
    const HexBoard board(fx.at("width").get<int>(), fx.at("height").get<int>());
    std::vector<std::uint8_t> status(board.cell_count());
    const auto rows = fx.at("rows_top_first").get<std::vector<std::string>>();
    for (int r = 0; r < board.height(); ++r)
      for (int x = 0; x < board.width(); ++x)
        status[board.index(board.hex(x, board.height() - 1 - r))] = rows.at(r).at(x) == '+' ? 1 : 0;
    const ExplorationPath path = explore(board, status);
    const bool cross = crossing_by_exploration(board, status);
    const bool conn = has_crossing(board.triplet(), PercolationMode::site, board.crossing_status(status));
    const bool ok = to_string(path.stop_cause) == fx.at("stop_cause").get<std::string>() &&
                    cross == fx.at("crossing").get<bool>() && conn == cross;
    add(std::string(name) + " exploration", ok, std::string("stop ") + to_string(path.stop_cause));
  }

  {
    const json fx = load_fixture(dir, "fig8.json");
    const TileDomain dom(fx.at("rows").get<int>(), fx.at("cols").get<int>());
    const LoopConfiguration cfg = tiles_from_rows(dom, fx.at("tiles_top_first").get<std::vector<std::string>>());
    const LoopCounts n = counts(cfg);
    const auto& e = fx.at("expected");
    add("fig8 loop counts", n.b == e["b"].get<int>() && n.c == e["c"].get<int>() && n.d == e["d"].get<int>(),
        "(b,c,d) = (" + std::to_string(n.b) + "," + std::to_string(n.c) + "," + std::to_string(n.d) + ")");
  }

  {
    const json fx = load_fixture(dir, "fig10.json");
    const int rows = fx.at("rows").get<int>(), cols = fx.at("cols").get<int>();
    const TileDomain probe(rows, cols);
    const auto pt = [](const json& v) { return Vec2{v[0].get<double>(), v[1].get<double>()}; };
    const TileDomain dom(rows, cols, probe.side_at(pt(fx["a"])), probe.side_at(pt(fx["b"])));
    for (const auto& c : fx.at("cases")) {
      const LoopConfiguration cfg = tiles_from_rows(dom, c.at("tiles_top_first").get<std::vector<std::string>>());
      const int side = dom.side_at(pt(c["side"]));
      const auto walk = walk_from_b(cfg);
      const auto hit = std::find_if(walk.begin(), walk.end(), [&](const StrandStep& s) { return s.side == side; });
      const bool ok = hit != walk.end() && hit->winding == c["winding_quarter_turns"].get<int>();
      add("fig10 winding " + num(c["winding_radians"].get<double>()), ok,
          hit == walk.end() ? "side not on the strand" : "quarter turns " + std::to_string(hit->winding));
    }
  }

  {
    const PercolationModel tri = PercolationModel::homogeneous(LatticeKind::triangular, PercolationMode::site, 0.5);
    const DiscreteTriplet dt = rasterize(rectangle_triplet(1.0, 0.7), tri, 0.05);
    const std::vector<std::uint8_t> ones(dt.sites.size(), 1), zeros(dt.sites.size(), 0);
    add("all-open crossing", has_crossing(dt, PercolationMode::site, ones), "true expected");
    add("all-closed crossing", !has_crossing(dt, PercolationMode::site, zeros), "false expected");
  }

  {
    const HexBoard board(4, 4);
    std::size_t bad = 0;
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << board.cell_count()); ++m) {
      const auto s = mask_bits(m, board.cell_count());
      if (crossing_by_exploration(board, s) !=
          has_crossing(board.triplet(), PercolationMode::site, board.crossing_status(s)))
        ++bad;
    }
    add("exploration vs connectivity, 4x4 board, 2^16 configurations", bad == 0, std::to_string(bad) + " mismatches");
  }

  {
    const TileDomain dom(2, 4);
    double err = 0.0;
    for (double beta : {critical_beta(), 0.3, 0.7}) {
      const auto a = exact_loop_law(dom, beta), b = induced_loop_law(dom, beta);
      for (std::size_t m = 0; m < a.size(); ++m) err = std::max(err, std::abs(a[m] - b[m]));
    }
    add("FK loop law vs spins and coins, 8 tiles", err < 1e-10, "max error " + num(err));
  }

  {
    const TileDomain dom = TileDomain::rectangle_chordal(2, 4);
    const CrResidual r = discrete_cr_residual(dom, smirnov_observable_exact(dom), false);
    add("exact observable local relation, 8 tiles", r.max_abs < 1e-12, "max residual " + num(r.max_abs));
  }

  {
    double worst = std::abs(cardy(1.0) - 0.5);
    for (double x : {0.25, 0.5, 0.75}) worst = std::max(worst, std::abs(carleson_triangle(x) - x));
    add("cardy(1) = 1/2 and triangle formula linear", worst < 1e-9, "max error " + num(worst));
  }

  return out;
}

}  // namespace critlab
