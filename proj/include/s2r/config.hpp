#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "baselines.hpp"
#include "collect.hpp"
#include "ilqr.hpp"
#include "invdyn.hpp"

namespace s2r {

// Invalid user input (unknown key, bad type, violated invariant). The CLI
// maps this to exit code 1; anything else that throws is a runtime failure (2).
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EvalSettings {
  int episodes = 10;
  int ref_episodes = 100;
  double threshold = 0.75;
  int seeds = 10;
};

struct SweepSettings {
  std::string axis = "tilt";  // tilt | gravity | noise
  std::vector<double> tilt_values = {0, 15, 30, 45, 60, 75, 90};  // degrees
  std::vector<double> gravity_values = {0.8, 0.9, 1.0, 1.1, 1.2};
  std::vector<std::pair<double, double>> noise_values = {
      {0.2, 0.0}, {0.2, 0.9}, {0.2, 1.0}, {1.0, 0.0}, {1.0, 0.9}, {1.0, 1.0}};
  std::vector<std::string> methods = {"expert", "oec", "gda", "ours-correction"};
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string method = "ours-correction";
  EnvParams source = reacher_params();
  EnvParams target = reacher_params();
  CollectConfig collect;
  TrainConfig train;
  int W = 2;
  std::string mode = "auto";  // auto | direct | correction
  IlqrConfig ilqr;
  BouncerGains gains;
  OecConfig oec;
  GdaConfig gda;
  EvalSettings eval;
  SweepSettings sweep;
  bool stop_after_crossing = false;
  int crossing_confirm = 3;
  std::string out_dir = "out";
  std::string references;    // cached score references (json); recomputed if empty
  std::string model_path;    // inverse-model checkpoint for eval / warm collect
  std::string dataset_path;  // sample cache for the train subcommand
  bool save_samples = false; // collect: also dump samples.jsonl per iteration

  // "auto" resolves per the usage defaults: correction for small motor noise
  // (and the gravity/tilt experiments), direct once noise std reaches 0.3.
  InvMode resolved_mode() const {
    if (mode == "direct") return InvMode::direct;
    if (mode == "correction") return InvMode::correction;
    return target.noise.std < 0.3 ? InvMode::correction : InvMode::direct;
  }
};

inline const std::set<std::string>& known_methods() {
  static const std::set<std::string> m = {
      "expert", "zero", "oec", "gda",
      "ours", "ours-direct", "ours-correction", "ours-correction-history"};
  return m;
}

// ---------------------------------------------------------------------------
// JSON binding. The default-constructed config defines the schema; parsing
// rejects unknown keys and type mismatches by full dotted path.

inline void to_json(json& j, const TrainConfig& c) {
  j = json{{"epochs", c.epochs},     {"batch", c.batch},
           {"hidden", c.hidden},     {"lr", c.adam.lr},
           {"early_stop", c.early_stop}, {"patience", c.patience}};
}

inline void from_json(const json& j, TrainConfig& c) {
  c.epochs = j.at("epochs").get<int>();
  c.batch = j.at("batch").get<int>();
  c.hidden = j.at("hidden").get<std::vector<int>>();
  c.adam.lr = j.at("lr").get<double>();
  c.early_stop = j.at("early_stop").get<bool>();
  c.patience = j.at("patience").get<int>();
}

inline void to_json(json& j, const CollectConfig& c) {
  j = json{{"p_inject", c.p_inject},
           {"inject_std", c.inject_std},
           {"deviation_delta", c.deviation_delta},
           {"deviation_patience", c.deviation_patience},
           {"samples_per_iteration", c.samples_per_iteration},
           {"iterations", c.iterations}};
}

inline void from_json(const json& j, CollectConfig& c) {
  c.p_inject = j.at("p_inject").get<double>();
  c.inject_std = j.at("inject_std").get<double>();
  c.deviation_delta = j.at("deviation_delta").get<double>();
  c.deviation_patience = j.at("deviation_patience").get<int>();
  c.samples_per_iteration = j.at("samples_per_iteration").get<int>();
  c.iterations = j.at("iterations").get<int>();
}

inline void to_json(json& j, const IlqrConfig& c) {
  j = json{{"horizon", c.horizon},       {"max_iters", c.max_iters},
           {"mu_init", c.mu_init},       {"mu_factor", c.mu_factor},
           {"mu_max", c.mu_max},         {"tol", c.tol},
           {"fd_h", c.fd_h},             {"line_search_steps", c.line_search_steps}};
}

inline void from_json(const json& j, IlqrConfig& c) {
  c.horizon = j.at("horizon").get<int>();
  c.max_iters = j.at("max_iters").get<int>();
  c.mu_init = j.at("mu_init").get<double>();
  c.mu_factor = j.at("mu_factor").get<double>();
  c.mu_max = j.at("mu_max").get<double>();
  c.tol = j.at("tol").get<double>();
  c.fd_h = j.at("fd_h").get<double>();
  c.line_search_steps = j.at("line_search_steps").get<int>();
}

inline void to_json(json& j, const BouncerGains& g) {
  j = json{{"kp", g.kp}, {"kd", g.kd}};
}

inline void from_json(const json& j, BouncerGains& g) {
  g.kp = j.at("kp").get<double>();
  g.kd = j.at("kd").get<double>();
}

inline void to_json(json& j, const OecConfig& c) {
  j = json{{"gamma", c.gamma}, {"gamma_grid", c.gamma_grid}};
}

inline void from_json(const json& j, OecConfig& c) {
  c.gamma = j.at("gamma").get<double>();
  c.gamma_grid = j.at("gamma_grid").get<std::vector<double>>();
}

inline void to_json(json& j, const GdaConfig& c) {
  j = json{{"forget", c.forget},
           {"forget_grid", c.forget_grid},
           {"ridge", c.ridge},
           {"prior_samples", c.prior_samples},
           {"prior_obs_std", c.prior_obs_std},
           {"pseudo_count", c.pseudo_count}};
}

inline void from_json(const json& j, GdaConfig& c) {
  c.forget = j.at("forget").get<double>();
  c.forget_grid = j.at("forget_grid").get<std::vector<double>>();
  c.ridge = j.at("ridge").get<double>();
  c.prior_samples = j.at("prior_samples").get<int>();
  c.prior_obs_std = j.at("prior_obs_std").get<double>();
  c.pseudo_count = j.at("pseudo_count").get<double>();
}

inline void to_json(json& j, const EvalSettings& c) {
  j = json{{"episodes", c.episodes},
           {"ref_episodes", c.ref_episodes},
           {"threshold", c.threshold},
           {"seeds", c.seeds}};
}

inline void from_json(const json& j, EvalSettings& c) {
  c.episodes = j.at("episodes").get<int>();
  c.ref_episodes = j.at("ref_episodes").get<int>();
  c.threshold = j.at("threshold").get<double>();
  c.seeds = j.at("seeds").get<int>();
}

inline void to_json(json& j, const SweepSettings& c) {
  j = json{{"axis", c.axis},
           {"tilt_values", c.tilt_values},
           {"gravity_values", c.gravity_values},
           {"noise_values", c.noise_values},
           {"methods", c.methods}};
}

inline void from_json(const json& j, SweepSettings& c) {
  c.axis = j.at("axis").get<std::string>();
  c.tilt_values = j.at("tilt_values").get<std::vector<double>>();
  c.gravity_values = j.at("gravity_values").get<std::vector<double>>();
  c.noise_values = j.at("noise_values").get<std::vector<std::pair<double, double>>>();
  c.methods = j.at("methods").get<std::vector<std::string>>();
}

inline void to_json(json& j, const RunConfig& c) {
  j = json{{"seed", c.seed},
           {"method", c.method},
           {"env", env_kind_name(c.source.kind)},
           {"source", c.source},
           {"target", c.target},
           {"collect", c.collect},
           {"train", c.train},
           {"W", c.W},
           {"mode", c.mode},
           {"ilqr", c.ilqr},
           {"gains", c.gains},
           {"oec", c.oec},
           {"gda", c.gda},
           {"eval", c.eval},
           {"sweep", c.sweep},
           {"stop_after_crossing", c.stop_after_crossing},
           {"crossing_confirm", c.crossing_confirm},
           {"out_dir", c.out_dir},
           {"references", c.references},
           {"model_path", c.model_path},
           {"dataset_path", c.dataset_path},
           {"save_samples", c.save_samples}};
}

inline void from_json(const json& j, RunConfig& c) {
  c.seed = j.at("seed").get<std::uint64_t>();
  c.method = j.at("method").get<std::string>();
  c.source = j.at("source").get<EnvParams>();
  c.target = j.at("target").get<EnvParams>();
  c.collect = j.at("collect").get<CollectConfig>();
  c.train = j.at("train").get<TrainConfig>();
  c.W = j.at("W").get<int>();
  c.mode = j.at("mode").get<std::string>();
  c.ilqr = j.at("ilqr").get<IlqrConfig>();
  c.gains = j.at("gains").get<BouncerGains>();
  c.oec = j.at("oec").get<OecConfig>();
  c.gda = j.at("gda").get<GdaConfig>();
  c.eval = j.at("eval").get<EvalSettings>();
  c.sweep = j.at("sweep").get<SweepSettings>();
  c.stop_after_crossing = j.at("stop_after_crossing").get<bool>();
  c.crossing_confirm = j.at("crossing_confirm").get<int>();
  c.out_dir = j.at("out_dir").get<std::string>();
  c.references = j.at("references").get<std::string>();
  c.model_path = j.at("model_path").get<std::string>();
  c.dataset_path = j.at("dataset_path").get<std::string>();
  c.save_samples = j.at("save_samples").get<bool>();
}

// ---------------------------------------------------------------------------

namespace detail {

inline std::string json_type_name(const json& j) {
  if (j.is_number()) return "number";
  if (j.is_string()) return "string";
  if (j.is_boolean()) return "bool";
  if (j.is_array()) return "array";
  if (j.is_object()) return "object";
  return j.type_name();
}

inline void merge_config(json& base, const json& user, const std::string& path) {
  if (!user.is_object())
    throw ConfigError("config" + (path.empty() ? "" : " key " + path) +
                      " must be a JSON object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string full = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown config key: " + full);
    json& slot = base[it.key()];
    const json& v = it.value();
    if (slot.is_object()) {
      merge_config(slot, v, full);
      continue;
    }
    const bool ok = (slot.is_number() && v.is_number()) ||
                    (slot.is_string() && v.is_string()) ||
                    (slot.is_boolean() && v.is_boolean()) ||
                    (slot.is_array() && v.is_array());
    if (!ok)
      throw ConfigError("config key " + full + " expects " + json_type_name(slot) +
                        ", got " + json_type_name(v));
    slot = v;
  }
}

inline std::vector<std::string> split_dotted(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : s) {
    if (ch == '.') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  parts.push_back(cur);
  return parts;
}

inline void apply_override(json& base, const std::string& dotted, const std::string& value) {
  const auto parts = split_dotted(dotted);
  json* cur = &base;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!cur->contains(parts[i]) || !(*cur)[parts[i]].is_object())
      throw ConfigError("unknown config key: " + dotted);
    cur = &(*cur)[parts[i]];
  }
  const std::string& leaf = parts.back();
  if (!cur->contains(leaf)) throw ConfigError("unknown config key: " + dotted);
  json& slot = (*cur)[leaf];
  try {
    if (slot.is_boolean()) {
      if (value == "true" || value == "1")
        slot = true;
      else if (value == "false" || value == "0")
        slot = false;
      else
        throw std::invalid_argument("not a bool");
    } else if (slot.is_number_unsigned()) {
      slot = static_cast<std::uint64_t>(std::stoull(value));
    } else if (slot.is_number_integer()) {
      slot = static_cast<std::int64_t>(std::stoll(value));
    } else if (slot.is_number()) {
      std::size_t used = 0;
      const double d = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument("trailing characters");
      slot = d;
    } else if (slot.is_string()) {
      slot = value;
    } else {  // arrays (and anything structured) accept JSON text
      slot = json::parse(value);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("override --" + dotted + " " + value + ": cannot parse as " +
                      json_type_name(slot));
  }
}

}  // namespace detail

inline void validate_config(const RunConfig& c) {
  auto fail = [](const std::string& msg) { throw ConfigError("invalid config: " + msg); };
  try {
    c.source.check();
    c.target.check();
    c.collect.check();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (c.source.kind != c.target.kind) fail("source and target must share an env kind");
  if (!known_methods().count(c.method)) fail("method " + c.method + " is not one of the known methods");
  if (c.mode != "auto" && c.mode != "direct" && c.mode != "correction")
    fail("mode must be auto, direct, or correction");
  if (c.W < 0) fail("W must be >= 0");
  if (c.train.epochs < 1) fail("train.epochs must be >= 1");
  if (c.train.batch < 1) fail("train.batch must be >= 1");
  if (!(c.train.adam.lr > 0.0)) fail("train.lr must be > 0");
  if (c.train.patience < 1) fail("train.patience must be >= 1");
  for (int h : c.train.hidden)
    if (h < 1) fail("train.hidden entries must be >= 1");
  if (c.ilqr.horizon < 1) fail("ilqr.horizon must be >= 1");
  if (c.ilqr.max_iters < 1) fail("ilqr.max_iters must be >= 1");
  if (!(c.ilqr.fd_h > 0.0)) fail("ilqr.fd_h must be > 0");
  if (c.ilqr.line_search_steps < 1) fail("ilqr.line_search_steps must be >= 1");
  if (c.eval.episodes < 1) fail("eval.episodes must be >= 1");
  if (c.eval.ref_episodes < 1) fail("eval.ref_episodes must be >= 1");
  if (!(c.eval.threshold > 0.0 && c.eval.threshold <= 1.5))
    fail("eval.threshold must be in (0, 1.5]");
  if (c.eval.seeds < 1) fail("eval.seeds must be >= 1");
  if (!(c.gains.kp >= 0.0 && c.gains.kd >= 0.0)) fail("gains must be >= 0");
  if (!(c.oec.gamma > 0.0 && c.oec.gamma <= 1.0)) fail("oec.gamma must be in (0, 1]");
  for (double g : c.oec.gamma_grid)
    if (!(g > 0.0 && g <= 1.0)) fail("oec.gamma_grid entries must be in (0, 1]");
  if (!(c.gda.forget > 0.0 && c.gda.forget < 1.0)) fail("gda.forget must be in (0, 1)");
  for (double w : c.gda.forget_grid)
    if (!(w > 0.0 && w < 1.0)) fail("gda.forget_grid entries must be in (0, 1)");
  if (!(c.gda.ridge > 0.0)) fail("gda.ridge must be > 0");
  if (c.gda.prior_samples < 2) fail("gda.prior_samples must be >= 2");
  if (!(c.gda.prior_obs_std > 0.0)) fail("gda.prior_obs_std must be > 0");
  if (c.sweep.axis != "tilt" && c.sweep.axis != "gravity" && c.sweep.axis != "noise")
    fail("sweep.axis must be tilt, gravity, or noise");
  if (c.sweep.tilt_values.empty() || c.sweep.gravity_values.empty() ||
      c.sweep.noise_values.empty())
    fail("sweep value grids must be nonempty");
  if (c.sweep.methods.empty()) fail("sweep.methods must be nonempty");
  for (const auto& m : c.sweep.methods)
    if (!known_methods().count(m) || m == "zero")
      fail("sweep method " + m + " is not sweepable");
  if (c.crossing_confirm < 1) fail("crossing_confirm must be >= 1");
  if (c.out_dir.empty()) fail("out_dir must be nonempty");
}

// Builds the effective config: defaults, then the file, then --key value
// overrides, validated. The "env" key (or --env) switches both source and
// target to that kind's defaults before other keys apply.
inline RunConfig parse_config(const std::string& config_path,
                              const std::vector<std::pair<std::string, std::string>>& overrides) {
  json file = json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file: " + config_path);
    try {
      file = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
    }
  }

  std::string env = "";
  if (file.contains("env")) {
    if (!file.at("env").is_string()) throw ConfigError("config key env expects string");
    env = file.at("env").get<std::string>();
  }
  for (const auto& [k, v] : overrides)
    if (k == "env") env = v;

  RunConfig defaults;
  if (!env.empty()) {
    const EnvKind kind = [&] {
      try {
        return env_kind_from_name(env);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }();
    defaults.source = (kind == EnvKind::reacher2) ? reacher_params() : bouncer_params();
    defaults.target = defaults.source;
  }

  json merged = defaults;
  detail::merge_config(merged, file, "");
  for (const auto& [k, v] : overrides) {
    if (k == "env") {
      merged["env"] = v;
      continue;
    }
    detail::apply_override(merged, k, v);
  }

  RunConfig rc;
  try {
    rc = merged.get<RunConfig>();
  } catch (const json::exception& e) {
    throw ConfigError("config deserialization failed: " + std::string(e.what()));
  }
  validate_config(rc);
  return rc;
}

// The echoed effective config; "auto" mode is resolved so a rerun of this
// file reproduces the run exactly.
inline json resolved_config_json(const RunConfig& c) {
  json j = c;
  j["mode"] = inv_mode_name(c.resolved_mode());
  return j;
}

inline void write_resolved_config(const RunConfig& c) {
  std::filesystem::create_directories(c.out_dir);
  const std::string path = c.out_dir + "/config.resolved.json";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << resolved_config_json(c).dump(2) << "\n";
}

}  // namespace s2r
