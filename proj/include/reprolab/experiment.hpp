#pragma once

// Declarative experiments: JSON config in, results.csv / fits.json /
// manifest.json out.

#include <openssl/evp.h>

#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "reprolab/lab.hpp"
#include "reprolab/scenarios.hpp"

namespace reprolab {

inline constexpr const char* kArtifactVersion = "0.1.0";

using json = nlohmann::json;

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// Exit statuses shared by the CLI and the tests.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitAccuracyFailed = 3,
  kExitInvariantFailed = 4,
  kExitIo = 5,
  kExitTruncated = 6,
};

template <class E>
E enum_from_name(const std::vector<std::pair<E, std::string>>& table, const std::string& name, const char* what) {
  for (const auto& [k, n] : table)
    if (n == name) return k;
  std::string valid;
  for (const auto& [k, n] : table) valid += (valid.empty() ? "" : ", ") + n;
  throw ConfigError(std::string("unknown ") + what + " '" + name + "' (valid: " + valid + ")");
}

// ---------------------------------------------------------------------------
// Config.

struct SolverDescriptor {
  std::optional<std::string> schedule;
  std::map<std::string, double> schedule_params;
  std::optional<std::string> averaging;
  std::optional<double> averaging_k;
  std::optional<std::size_t> batch_size;
  std::optional<bool> projection;

  bool recommended() const {
    return !schedule && schedule_params.empty() && !averaging && !averaging_k && !batch_size && !projection;
  }
  bool operator==(const SolverDescriptor&) const = default;
};

struct OracleOverrides {
  std::optional<std::string> kind;
  std::optional<std::string> noise;
  std::map<std::string, double> noise_params;
  std::optional<std::string> init;
  std::map<std::string, double> init_params;

  bool empty() const { return !kind && !noise && noise_params.empty() && !init && init_params.empty(); }
  bool operator==(const OracleOverrides&) const = default;
};

struct ExperimentConfig {
  std::string experiment_id;
  std::string scenario;
  ParamMap params;
  OracleOverrides oracle_overrides;
  SolverDescriptor solver;
  std::map<std::string, std::vector<double>> grid;
  std::size_t trials = 64;
  std::uint64_t master_seed = 0;
  std::string pairing = "independent";
  std::string output_dir;
  std::size_t adversary_search_n = 16;
  double slope_tolerance = 0.35;
  double accuracy_tolerance = 0.0;
  bool record_wallclock = false;
  double budget_seconds = 0.0;

  bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

inline std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline void check_keys(const json& obj, const std::vector<std::string>& allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      std::string valid;
      for (const auto& a : allowed) valid += (valid.empty() ? "" : ", ") + a;
      throw ConfigError("unknown key '" + it.key() + "' in " + where + " (allowed: " + valid + ")");
    }
}

inline double as_number(const json& v, const std::string& what) {
  if (!v.is_number()) throw ConfigError("'" + what + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError("'" + what + "' must be finite");
  return d;
}

inline std::string as_string(const json& v, const std::string& what) {
  if (!v.is_string()) throw ConfigError("'" + what + "' must be a string");
  return v.get<std::string>();
}

inline std::size_t as_count(const json& v, const std::string& what, std::size_t min) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    throw ConfigError("'" + what + "' must be a nonnegative integer");
  const auto n = v.get<std::uint64_t>();
  if (n < min) throw ConfigError("'" + what + "' must be >= " + std::to_string(min));
  return std::size_t(n);
}

inline std::map<std::string, double> as_number_map(const json& v, const std::string& what) {
  if (!v.is_object()) throw ConfigError("'" + what + "' must be an object of numbers");
  std::map<std::string, double> out;
  for (auto it = v.begin(); it != v.end(); ++it) out[it.key()] = as_number(it.value(), what + "." + it.key());
  return out;
}

inline json number_map_json(const std::map<std::string, double>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

inline const std::vector<std::string>& schedule_param_keys() {
  static const std::vector<std::string> v = {"eta", "epsilon", "T", "L", "mu", "k"};
  return v;
}

}  // namespace detail

inline ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  detail::check_keys(j,
                     {"experiment_id", "scenario", "params", "oracle_overrides", "solver", "grid", "trials",
                      "master_seed", "pairing", "output_dir", "adversary_search_n", "slope_tolerance",
                      "accuracy_tolerance", "record_wallclock", "budget_seconds"},
                     "config");
  ExperimentConfig c;
  if (!j.contains("scenario")) throw ConfigError("missing required field 'scenario'");
  c.scenario = detail::as_string(j["scenario"], "scenario");
  try {
    scenario_info(c.scenario);
  } catch (const InvalidParameter& e) {
    throw ConfigError(e.what());
  }
  if (!j.contains("master_seed")) throw ConfigError("missing required field 'master_seed'");
  {
    const json& s = j["master_seed"];
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
      throw ConfigError("'master_seed' must be an unsigned 64-bit integer");
    c.master_seed = s.get<std::uint64_t>();
  }
  if (!j.contains("solver")) throw ConfigError("missing required field 'solver'");
  c.experiment_id = j.contains("experiment_id") ? detail::as_string(j["experiment_id"], "experiment_id") : c.scenario;
  if (c.experiment_id.empty()) throw ConfigError("'experiment_id' must be nonempty");
  if (j.contains("params")) c.params = detail::as_number_map(j["params"], "params");

  if (j.contains("oracle_overrides")) {
    const json& o = j["oracle_overrides"];
    if (!o.is_object()) throw ConfigError("'oracle_overrides' must be an object");
    detail::check_keys(o, {"kind", "noise", "noise_params", "init", "init_params"}, "oracle_overrides");
    auto& oo = c.oracle_overrides;
    if (o.contains("kind")) {
      oo.kind = detail::as_string(o["kind"], "oracle_overrides.kind");
      enum_from_name(oracle_kind_names(), *oo.kind, "oracle kind");
    }
    if (o.contains("noise")) {
      oo.noise = detail::as_string(o["noise"], "oracle_overrides.noise");
      if (enum_from_name(noise_kind_names(), *oo.noise, "noise kind") == NoiseKind::custom_adversary)
        throw ConfigError("noise kind 'custom_adversary' needs a callback and cannot come from a config");
    }
    if (o.contains("noise_params")) oo.noise_params = detail::as_number_map(o["noise_params"], "oracle_overrides.noise_params");
    if (o.contains("init")) {
      oo.init = detail::as_string(o["init"], "oracle_overrides.init");
      enum_from_name(init_mode_names(), *oo.init, "init mode");
    }
    if (o.contains("init_params")) oo.init_params = detail::as_number_map(o["init_params"], "oracle_overrides.init_params");
  }

  {
    const json& s = j["solver"];
    if (s.is_string()) {
      if (s.get<std::string>() != "recommended")
        throw ConfigError("'solver' must be \"recommended\" or an object");
    } else if (s.is_object()) {
      detail::check_keys(s, {"schedule", "schedule_params", "averaging", "averaging_k", "batch_size", "projection"},
                         "solver");
      auto& sd = c.solver;
      if (s.contains("schedule")) {
        sd.schedule = detail::as_string(s["schedule"], "solver.schedule");
        enum_from_name(step_kind_names(), *sd.schedule, "schedule");
      }
      if (s.contains("schedule_params")) {
        sd.schedule_params = detail::as_number_map(s["schedule_params"], "solver.schedule_params");
        for (const auto& [k, v] : sd.schedule_params)
          if (std::find(detail::schedule_param_keys().begin(), detail::schedule_param_keys().end(), k) ==
              detail::schedule_param_keys().end())
            throw ConfigError("unknown key '" + k + "' in solver.schedule_params (allowed: eta, epsilon, T, L, mu, k)");
      }
      if (s.contains("averaging")) {
        sd.averaging = detail::as_string(s["averaging"], "solver.averaging");
        enum_from_name(avg_kind_names(), *sd.averaging, "averaging");
      }
      if (s.contains("averaging_k")) sd.averaging_k = detail::as_number(s["averaging_k"], "solver.averaging_k");
      if (s.contains("batch_size")) sd.batch_size = detail::as_count(s["batch_size"], "solver.batch_size", 1);
      if (s.contains("projection")) {
        if (!s["projection"].is_boolean()) throw ConfigError("'solver.projection' must be a boolean");
        sd.projection = s["projection"].get<bool>();
      }
    } else {
      throw ConfigError("'solver' must be \"recommended\" or an object");
    }
  }

  if (j.contains("grid")) {
    const json& g = j["grid"];
    if (!g.is_object()) throw ConfigError("'grid' must be an object of axis -> list of numbers");
    detail::check_keys(g, grid_axes(), "grid");
    for (auto it = g.begin(); it != g.end(); ++it) {
      if (!it.value().is_array() || it.value().empty())
        throw ConfigError("grid axis '" + it.key() + "' must be a nonempty list of numbers");
      std::vector<double> vals;
      for (const auto& v : it.value()) vals.push_back(detail::as_number(v, "grid." + it.key()));
      c.grid[it.key()] = vals;
    }
  }
  if (j.contains("trials")) c.trials = detail::as_count(j["trials"], "trials", 1);
  if (j.contains("pairing")) c.pairing = detail::as_string(j["pairing"], "pairing");
  try {
    parse_pairing(c.pairing);
  } catch (const InvalidParameter& e) {
    throw ConfigError(e.what());
  }
  c.output_dir = j.contains("output_dir") ? detail::as_string(j["output_dir"], "output_dir") : "results/" + c.experiment_id;
  if (j.contains("adversary_search_n")) c.adversary_search_n = detail::as_count(j["adversary_search_n"], "adversary_search_n", 0);
  if (j.contains("slope_tolerance")) c.slope_tolerance = detail::as_number(j["slope_tolerance"], "slope_tolerance");
  if (j.contains("accuracy_tolerance")) c.accuracy_tolerance = detail::as_number(j["accuracy_tolerance"], "accuracy_tolerance");
  if (j.contains("record_wallclock")) {
    if (!j["record_wallclock"].is_boolean()) throw ConfigError("'record_wallclock' must be a boolean");
    c.record_wallclock = j["record_wallclock"].get<bool>();
  }
  if (j.contains("budget_seconds")) c.budget_seconds = detail::as_number(j["budget_seconds"], "budget_seconds");
  if (c.slope_tolerance < 0 || c.accuracy_tolerance < 0 || c.budget_seconds < 0)
    throw ConfigError("tolerances and budget_seconds must be nonnegative");

  // Every row must name each required param and nothing the scenario lacks.
  const ScenarioInfo& info = scenario_info(c.scenario);
  ParamMap probe = c.params;
  for (const auto& [axis, vals] : c.grid) probe[axis] = vals.front();
  for (const auto& [k, v] : probe) {
    const bool known = std::find(info.required.begin(), info.required.end(), k) != info.required.end() ||
                       info.optional.count(k) || k == "epsilon";
    if (!known) throw ConfigError("scenario '" + c.scenario + "' does not take param '" + k + "'");
  }
  for (const auto& r : info.required)
    if (!probe.count(r)) throw ConfigError("scenario '" + c.scenario + "' is missing param '" + r + "'");
  return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = detail::line_col(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError("malformed JSON at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                      e.what());
  }
  return config_from_json(j);
}

// Every field written out, defaults included.
inline json config_to_json(const ExperimentConfig& c) {
  json j;
  j["experiment_id"] = c.experiment_id;
  j["scenario"] = c.scenario;
  j["params"] = detail::number_map_json(c.params);
  json o = json::object();
  if (c.oracle_overrides.kind) o["kind"] = *c.oracle_overrides.kind;
  if (c.oracle_overrides.noise) o["noise"] = *c.oracle_overrides.noise;
  if (!c.oracle_overrides.noise_params.empty()) o["noise_params"] = detail::number_map_json(c.oracle_overrides.noise_params);
  if (c.oracle_overrides.init) o["init"] = *c.oracle_overrides.init;
  if (!c.oracle_overrides.init_params.empty()) o["init_params"] = detail::number_map_json(c.oracle_overrides.init_params);
  j["oracle_overrides"] = o;
  if (c.solver.recommended()) {
    j["solver"] = "recommended";
  } else {
    json s = json::object();
    if (c.solver.schedule) s["schedule"] = *c.solver.schedule;
    if (!c.solver.schedule_params.empty()) s["schedule_params"] = detail::number_map_json(c.solver.schedule_params);
    if (c.solver.averaging) s["averaging"] = *c.solver.averaging;
    if (c.solver.averaging_k) s["averaging_k"] = *c.solver.averaging_k;
    if (c.solver.batch_size) s["batch_size"] = *c.solver.batch_size;
    if (c.solver.projection) s["projection"] = *c.solver.projection;
    j["solver"] = s;
  }
  json g = json::object();
  for (const auto& [k, v] : c.grid) g[k] = v;
  j["grid"] = g;
  j["trials"] = c.trials;
  j["master_seed"] = c.master_seed;
  j["pairing"] = c.pairing;
  j["output_dir"] = c.output_dir;
  j["adversary_search_n"] = c.adversary_search_n;
  j["slope_tolerance"] = c.slope_tolerance;
  j["accuracy_tolerance"] = c.accuracy_tolerance;
  j["record_wallclock"] = c.record_wallclock;
  j["budget_seconds"] = c.budget_seconds;
  return j;
}

// Sorted keys, no whitespace; the input of config_hash.
inline std::string canonical_config(const ExperimentConfig& c) { return config_to_json(c).dump(); }

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

inline std::string config_hash(const ExperimentConfig& c) { return sha256_hex(canonical_config(c)); }

// ---------------------------------------------------------------------------
// Instance assembly from a config row.

inline Instance make_configured_instance(const ExperimentConfig& c, const ParamMap& row) {
  Instance in;
  try {
    in = build_instance(c.scenario, row);
  } catch (const InvalidParameter& e) {
    throw ConfigError(e.what());
  }
  const auto& oo = c.oracle_overrides;
  if (oo.kind) in.oracle.kind = enum_from_name(oracle_kind_names(), *oo.kind, "oracle kind");
  if (oo.noise) {
    in.oracle.schedule.kind = enum_from_name(noise_kind_names(), *oo.noise, "noise kind");
    in.oracle.schedule.params.clear();
  }
  for (const auto& [k, v] : oo.noise_params) in.oracle.schedule.params[k] = v;
  if (oo.init) in.oracle.init.mode = enum_from_name(init_mode_names(), *oo.init, "init mode");
  for (const auto& [k, v] : oo.init_params) in.oracle.init.params[k] = v;

  const auto& sd = c.solver;
  if (sd.schedule) in.solver.schedule = StepSchedule{enum_from_name(step_kind_names(), *sd.schedule, "schedule"), {}};
  for (const auto& [k, v] : sd.schedule_params) in.solver.schedule.params[k] = v;
  if (sd.averaging) {
    in.solver.averaging = AveragingScheme{enum_from_name(avg_kind_names(), *sd.averaging, "averaging"), 0.0};
    if (in.solver.averaging.kind == AvgKind::shifted_linear) {
      const StepSchedule s = resolve_schedule(in.solver.schedule, in);
      auto it = s.params.find("k");
      if (it != s.params.end()) {
        in.solver.averaging.k = it->second;
      } else if (s.params.count("L") && s.params.count("mu")) {
        in.solver.averaging.k = default_shift_k(s.params.at("L"), s.params.at("mu"));
      }
    }
  }
  if (sd.averaging_k) in.solver.averaging.k = *sd.averaging_k;
  if (sd.batch_size) in.solver.batch_size = *sd.batch_size;
  if (sd.projection) in.solver.project = *sd.projection;
  return in;
}

// ---------------------------------------------------------------------------
// Output files.

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline const std::vector<std::string>& results_columns() {
  static const std::vector<std::string> v = {
      "experiment_id", "scenario", "T", "epsilon", "delta", "mu", "trials", "pairing", "deviation_mean",
      "deviation_stderr", "subopt_mean", "subopt_max", "oracle_calls", "wallclock_s"};
  return v;
}

inline std::string results_csv(const std::string& experiment_id, const SweepTable& t) {
  std::string out;
  for (std::size_t i = 0; i < results_columns().size(); ++i) out += (i ? "," : "") + results_columns()[i];
  out += "\n";
  auto opt = [](const std::optional<double>& v) { return v ? fmt17(*v) : std::string(); };
  for (const auto& r : t.rows) {
    std::vector<std::string> f = {csv_field(experiment_id),
                                  csv_field(t.scenario),
                                  opt(r.param("T")),
                                  opt(r.param("epsilon")),
                                  opt(r.param("delta")),
                                  opt(r.param("mu")),
                                  std::to_string(r.deviation.trials),
                                  to_string(r.deviation.pairing),
                                  fmt17(r.deviation.mean_sq_dev),
                                  fmt17(r.deviation.stderr_),
                                  r.accuracy ? fmt17(r.accuracy->mean_subopt) : "",
                                  r.accuracy ? fmt17(r.accuracy->max_subopt) : "",
                                  std::to_string(r.oracle_calls),
                                  fmt17(r.wallclock_s)};
    for (std::size_t i = 0; i < f.size(); ++i) out += (i ? "," : "") + f[i];
    out += "\n";
  }
  return out;
}

inline json fit_to_json(const ScalingFit& f) {
  json j;
  j["axis"] = f.axis;
  j["group"] = detail::number_map_json(f.group);
  j["ok"] = f.ok;
  if (f.ok) {
    j["slope"] = f.slope;
    j["intercept"] = f.intercept;
    j["r_squared"] = f.r_squared;
  } else {
    j["slope"] = nullptr;
    j["intercept"] = nullptr;
    j["r_squared"] = nullptr;
  }
  j["expected_slope"] = f.expected_slope ? json(*f.expected_slope) : json(nullptr);
  j["within_tolerance"] = f.within_tolerance ? json(*f.within_tolerance) : json(nullptr);
  j["points"] = f.points;
  j["dropped_zero_rows"] = f.dropped_zero;
  j["excluded_accuracy_rows"] = f.excluded_accuracy;
  if (!f.note.empty()) j["note"] = f.note;
  return j;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + p.string() + "' for writing: " + std::strerror(errno));
  f << content;
  f.close();
  if (!f) throw IoError("write to '" + p.string() + "' failed");
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot open '" + p.string() + "' for reading");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// run_experiment.

struct ResultManifest {
  std::string experiment_id;
  std::string artifact_version = kArtifactVersion;
  std::string config_hash;
  std::string started_at, finished_at;
  std::vector<std::string> files;
  std::string status = "truncated";
  std::vector<std::string> notes;

  json to_json() const {
    json j;
    j["experiment_id"] = experiment_id;
    j["artifact_version"] = artifact_version;
    j["config_hash"] = config_hash;
    j["rng_algorithm"] = kRngAlgorithm;
    j["started_at"] = started_at;
    j["finished_at"] = finished_at.empty() ? json(nullptr) : json(finished_at);
    j["files"] = files;
    j["status"] = status;
    j["notes"] = notes;
    return j;
  }

  int exit_code() const {
    if (status == "ok") return kExitOk;
    if (status == "accuracy_failed") return kExitAccuracyFailed;
    if (status == "invariant_failed") return kExitInvariantFailed;
    return kExitTruncated;
  }
};

struct RunEnvironment {
  std::size_t threads = 1;
  const std::atomic<bool>* cancel = nullptr;
  std::optional<std::string> output_dir;  // overrides the config's
};

// The sweep behind run_experiment, without touching the filesystem.
inline SweepTable run_sweep(const ExperimentConfig& c, const RunEnvironment& env = {}) {
  SweepSpec spec;
  spec.base = c.params;
  spec.grid = c.grid;
  spec.trials = c.trials;
  spec.pairing = parse_pairing(c.pairing);
  spec.master_seed = c.master_seed;
  spec.accuracy_tolerance = c.accuracy_tolerance;
  spec.budget_seconds = c.budget_seconds;
  LabOptions opt;
  opt.threads = env.threads;
  opt.adversary_search_n = c.adversary_search_n;
  opt.cancel = env.cancel;
  SweepTable table;
  try {
    table = sweep([&](const ParamMap& row) { return make_configured_instance(c, row); }, spec, opt, c.record_wallclock);
  } catch (const InvalidParameter& e) {
    throw ConfigError(e.what());
  }
  if (table.scenario.empty()) table.scenario = c.scenario;
  return table;
}

// The manifest is written first with status "truncated" and rewritten at the
// end, so a killed run leaves a truncated manifest behind.
inline ResultManifest run_experiment(const ExperimentConfig& c, const RunEnvironment& env = {}) {
  namespace fs = std::filesystem;
  const fs::path dir = env.output_dir ? *env.output_dir : c.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());

  ResultManifest m;
  m.experiment_id = c.experiment_id;
  m.config_hash = config_hash(c);
  m.started_at = utc_now();
  write_file(dir / "manifest.json", m.to_json().dump(2) + "\n");

  const SweepTable table = run_sweep(c, env);

  write_file(dir / "results.csv", results_csv(c.experiment_id, table));
  m.files.push_back("results.csv");

  json fits;
  fits["experiment_id"] = c.experiment_id;
  fits["scenario"] = table.scenario;
  fits["cell"] = table.cell;
  fits["slope_tolerance"] = c.slope_tolerance;
  fits["truncated"] = table.truncated;
  fits["fits"] = json::array();
  for (const auto& f : fit_table(table, c.slope_tolerance)) fits["fits"].push_back(fit_to_json(f));
  json failed = json::array();
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    if (table.rows[i].accuracy_failed) {
      json r;
      r["row"] = i;
      r["params"] = detail::number_map_json(table.rows[i].params);
      r["subopt_mean"] = table.rows[i].accuracy->mean_subopt;
      failed.push_back(r);
    }
  fits["accuracy_failed_rows"] = failed;
  write_file(dir / "fits.json", fits.dump(2) + "\n");
  m.files.push_back("fits.json");
  m.files.push_back("manifest.json");

  if (table.truncated) {
    m.status = "truncated";
    m.notes.push_back("sweep stopped early: " + table.truncation_reason + "; " + std::to_string(table.rows.size()) +
                      " rows written");
  } else if (!failed.empty()) {
    m.status = "accuracy_failed";
    m.notes.push_back(std::to_string(failed.size()) + " rows missed the accuracy target and were left out of the fits");
  } else {
    m.status = "ok";
  }
  for (const auto& f : fits["fits"])
    if (f["within_tolerance"].is_boolean() && !f["within_tolerance"].get<bool>())
      m.notes.push_back("slope vs " + f["axis"].get<std::string>() + " outside tolerance");
  m.finished_at = utc_now();
  write_file(dir / "manifest.json", m.to_json().dump(2) + "\n");
  return m;
}

// ---------------------------------------------------------------------------
// Catalog.

inline json slopes_json(const ExpectedSlopes& s) {
  auto v = [](const std::optional<double>& d) { return d ? json(*d) : json(nullptr); };
  return json{{"T", v(s.T)}, {"epsilon", v(s.epsilon)}, {"delta", v(s.delta)}};
}

inline json list_catalog() {
  json j;
  j["artifact_version"] = kArtifactVersion;
  j["rng_algorithm"] = kRngAlgorithm;
  j["scenarios"] = json::array();
  for (const auto& s : scenario_catalog()) {
    json e;
    e["scenario_id"] = s.id;
    e["required_params"] = s.required;
    e["optional_params"] = detail::number_map_json(s.optional);
    e["dim"] = s.dim_formula;
    e["citation"] = s.description;
    e["cell"] = s.cell;
    e["expected_slopes"] = slopes_json(expected_slope_table().at(s.cell));
    j["scenarios"].push_back(e);
  }
  json table = json::object();
  for (const auto& [cell, s] : expected_slope_table()) table[cell] = slopes_json(s);
  j["expected_slopes"] = table;
  auto names = [](const auto& tbl) {
    json a = json::array();
    for (const auto& [k, n] : tbl) a.push_back(n);
    return a;
  };
  j["schedules"] = names(step_kind_names());
  j["averaging"] = names(avg_kind_names());
  j["oracle_kinds"] = names(oracle_kind_names());
  j["noise_kinds"] = names(noise_kind_names());
  j["init_modes"] = names(init_mode_names());
  j["pairings"] = names(pairing_names());
  j["invariants"] = invariant_ids();
  return j;
}

// ---------------------------------------------------------------------------
// Plot data.

struct PlotData {
  std::string csv;
  std::size_t dropped_zero = 0;
  std::vector<ScalingFit> fits;
  // per group: (log x, log y) points
  std::vector<std::vector<std::pair<double, double>>> points;
  std::vector<std::string> group_labels;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

// Columns: log_axis, log_dev, fit_line, group. Rows whose other axes differ
// go to separate groups, each with its own fit.
inline PlotData emit_plotdata(const std::string& results_path, const std::string& axis) {
  if (std::find(grid_axes().begin(), grid_axes().end(), axis) == grid_axes().end())
    throw InvalidParameter("axis '" + axis + "' is not one of T, epsilon, delta, mu");
  if (!std::filesystem::exists(results_path)) throw IoError("results file '" + results_path + "' does not exist");
  std::istringstream in(read_file(results_path));
  std::string line;
  if (!std::getline(in, line)) throw InsufficientData("results file '" + results_path + "' is empty");
  const auto header = detail::split_csv_line(line);
  auto col = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InvalidInput("results file lacks column '" + name + "'");
    return std::size_t(it - header.begin());
  };
  const std::size_t ax = col(axis), dev = col("deviation_mean");
  std::vector<std::size_t> others;
  for (const auto& a : grid_axes())
    if (a != axis) others.push_back(col(a));

  PlotData pd;
  std::map<std::string, std::vector<SweepRow>> groups;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != header.size()) throw InvalidInput("malformed results row: " + line);
    if (f[ax].empty()) continue;
    const double d = std::stod(f[dev]);
    if (!(d > 0.0)) {
      ++pd.dropped_zero;
      continue;
    }
    std::string label;
    for (std::size_t o : others)
      if (!f[o].empty()) label += (label.empty() ? "" : ";") + header[o] + "=" + f[o];
    SweepRow r;
    r.params[axis] = std::stod(f[ax]);
    r.deviation.mean_sq_dev = d;
    groups[label.empty() ? "all" : label].push_back(r);
  }
  if (groups.empty()) throw InsufficientData("no usable rows for axis '" + axis + "'");

  std::string out = "# plotdata axis=" + axis + " source=" + results_path + "\n";
  out += "# dropped_zero_deviation_rows=" + std::to_string(pd.dropped_zero) + "\n";
  std::string body = "log_axis,log_dev,fit_line,group\n";
  for (const auto& [label, rows] : groups) {
    ScalingFit fit = fit_scaling(rows, axis);
    out += "# group " + label + ": slope=" + fmt17(fit.slope) + " intercept=" + fmt17(fit.intercept) +
           " r_squared=" + fmt17(fit.r_squared) + "\n";
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rows) {
      const double lx = std::log(r.params.at(axis)), ly = std::log(r.deviation.mean_sq_dev);
      pts.push_back({lx, ly});
      body += fmt17(lx) + "," + fmt17(ly) + "," + fmt17(fit.intercept + fit.slope * lx) + "," + csv_field(label) + "\n";
    }
    pd.fits.push_back(fit);
    pd.points.push_back(std::move(pts));
    pd.group_labels.push_back(label);
  }
  pd.csv = out + body;
  return pd;
}

// Minimal log-log chart: markers for the data, a line per fit.
inline std::string plot_svg(const PlotData& pd, const std::string& axis) {
  const double W = 640, H = 420, ml = 70, mr = 20, mt = 20, mb = 50;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& g : pd.points)
    for (const auto& [x, y] : g) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto X = [&](double x) { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); };
  auto Y = [&](double y) { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream s;
  s.precision(6);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\"" << H - mb
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << (W + ml) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"13\">log "
    << axis << "</text>\n";
  s << "<text x=\"16\" y=\"" << (H - mb + mt) / 2 << "\" font-size=\"13\" transform=\"rotate(-90 16 "
    << (H - mb + mt) / 2 << ")\" text-anchor=\"middle\">log deviation</text>\n";
  for (std::size_t g = 0; g < pd.points.size(); ++g) {
    const char* c = colors[g % 6];
    const auto& f = pd.fits[g];
    s << "<line x1=\"" << X(x0) << "\" y1=\"" << Y(f.intercept + f.slope * x0) << "\" x2=\"" << X(x1) << "\" y2=\""
      << Y(f.intercept + f.slope * x1) << "\" stroke=\"" << c << "\"/>\n";
    for (const auto& [x, y] : pd.points[g])
      s << "<circle cx=\"" << X(x) << "\" cy=\"" << Y(y) << "\" r=\"4\" fill=\"" << c << "\"/>\n";
    s << "<text x=\"" << ml + 10 << "\" y=\"" << mt + 16 * (g + 1) << "\" font-size=\"12\" fill=\"" << c << "\">"
      << pd.group_labels[g] << ": slope " << f.slope << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace reprolab
