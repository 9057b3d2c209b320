#pragma once

#include <cstdio>
#include <ostream>

#include "config.hpp"
#include "transfer.hpp"

namespace s2r {

inline std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

struct SweepPoint {
  double a = 0.0;  // tilt degrees | gravity scale | noise std
  double b = 0.0;  // noise rho
};

inline std::vector<SweepPoint> sweep_grid(const SweepSettings& s) {
  std::vector<SweepPoint> pts;
  if (s.axis == "tilt")
    for (double v : s.tilt_values) pts.push_back({v, 0.0});
  else if (s.axis == "gravity")
    for (double v : s.gravity_values) pts.push_back({v, 0.0});
  else
    for (const auto& [sd, rho] : s.noise_values) pts.push_back({sd, rho});
  return pts;
}

inline std::string sweep_value_label(const std::string& axis, const SweepPoint& p) {
  if (axis == "noise") return fmt_g(p.a) + "/" + fmt_g(p.b);
  return fmt_g(p.a);
}

inline EnvParams target_for_point(const EnvParams& source, const std::string& axis,
                                  const SweepPoint& p) {
  EnvParams t = source;
  if (axis == "tilt")
    t.plane_tilt = p.a * M_PI / 180.0;
  else if (axis == "gravity")
    t.gravity_scale = p.a;
  else
    t.noise = NoiseParams{p.a, p.b};
  return t;
}

struct SweepRow {
  std::string env, method, axis, value;
  int seed = 0;
  double score = 0.0;
  std::string samples_to_75;  // empty: not applicable; "nr": not reached
};

inline std::string sweep_csv_header() { return "env,method,axis,value,seed,score,samples_to_75"; }

inline std::string to_csv(const SweepRow& r) {
  return r.env + "," + r.method + "," + r.axis + "," + r.value + "," +
         std::to_string(r.seed) + "," + fmt_g(r.score) + "," + r.samples_to_75;
}

namespace detail {

struct MethodRun {
  double score = 0.0;
  std::optional<long> samples;
  bool has_samples_column = false;
};

// mode and window implied by an "ours*" method name: the plain "ours" takes
// the config's (possibly auto-resolved) mode, the suffixed names pin theirs,
// and the -history variant also pins W = 2 so it can sit next to a W = 0 run
// of the same mode in one sweep.
inline void ours_mode_window(const std::string& method, const RunConfig& rc, InvMode& mode,
                             int& W) {
  W = rc.W;
  if (method == "ours") {
    mode = rc.resolved_mode();
  } else if (method == "ours-direct") {
    mode = InvMode::direct;
  } else if (method == "ours-correction") {
    mode = InvMode::correction;
  } else {  // ours-correction-history
    mode = InvMode::correction;
    W = 2;
  }
}

inline TrainLoopConfig train_loop_config(const RunConfig& rc, InvMode mode, int W) {
  TrainLoopConfig c;
  c.W = W;
  c.mode = mode;
  c.collect = rc.collect;
  c.train = rc.train;
  c.eval_episodes = rc.eval.episodes;
  c.threshold = rc.eval.threshold;
  c.stop_after_crossing = rc.stop_after_crossing;
  c.crossing_confirm = rc.crossing_confirm;
  return c;
}

}  // namespace detail

// A normalized-score evaluation of one policy on one target (median over
// eval episodes).
inline double score_policy(const EnvParams& target, const PolicyFactory& factory,
                           int episodes, const ScoreRefs& refs, const RngStream& rng) {
  return normalized_score(evaluate_policy_median(target, factory, episodes, rng), refs);
}

struct SweepResult {
  std::vector<SweepRow> rows;
  json summary;
};

// Runs the full grid: methods x points x seeds, streaming CSV rows (flushed
// after every grid point) and accumulating a summary. Baselines are scored for
// every hyperparameter in their declared grid; rows report the hyperparameter
// with the best per-point median.
inline SweepResult run_sweep(const RunConfig& rc, const ScoreRefs& refs,
                             std::ostream& csv, std::ostream* log = nullptr) {
  const std::vector<SweepPoint> pts = sweep_grid(rc.sweep);
  const std::string env_name = env_kind_name(rc.source.kind);
  const RngStream master(rc.seed);

  SweepResult out;
  out.summary = json{{"env", env_name},
                     {"axis", rc.sweep.axis},
                     {"seeds", rc.eval.seeds},
                     {"threshold", rc.eval.threshold},
                     {"points", json::array()}};

  csv << sweep_csv_header() << "\n";

  for (std::size_t pi = 0; pi < pts.size(); ++pi) {
    const EnvParams target = target_for_point(rc.source, rc.sweep.axis, pts[pi]);
    const std::string value = sweep_value_label(rc.sweep.axis, pts[pi]);
    json point_summary{{"value", value}, {"methods", json::object()}};

    for (std::size_t mi = 0; mi < rc.sweep.methods.size(); ++mi) {
      const std::string& method = rc.sweep.methods[mi];
      if (log)
        (*log) << "[sweep] " << env_name << " " << rc.sweep.axis << "=" << value << " "
               << method << std::endl;

      std::vector<detail::MethodRun> runs(rc.eval.seeds);
      json extra = json::object();

      auto job_rng = [&](int seed) {
        return master.substream(1000003ull * pi + 101ull * static_cast<std::uint64_t>(seed) +
                                mi + 7);
      };

      if (method == "expert") {
        PolicyFactory f = make_expert_factory(rc.source, rc.ilqr, rc.gains);
        for (int s = 0; s < rc.eval.seeds; ++s)
          runs[s].score = score_policy(target, f, rc.eval.episodes, refs, job_rng(s));
      } else if (method == "oec" || method == "gda") {
        const std::vector<double> grid =
            (method == "oec") ? rc.oec.gamma_grid : rc.gda.forget_grid;
        double best_median = -1e30;
        double best_hyper = grid.front();
        std::vector<double> best_scores;
        json hyper_medians = json::object();
        for (double hyper : grid) {
          std::vector<double> scores(rc.eval.seeds);
          for (int s = 0; s < rc.eval.seeds; ++s) {
            PolicyFactory f;
            if (method == "oec") {
              f = make_oec_factory(rc.source, hyper, rc.ilqr);
            } else {
              GdaConfig g = rc.gda;
              g.forget = hyper;
              f = make_gda_factory(rc.source, g, rc.ilqr, job_rng(s).substream(777));
            }
            scores[s] = score_policy(target, f, rc.eval.episodes, refs, job_rng(s));
          }
          const double med = median(scores);
          hyper_medians[fmt_g(hyper)] = med;
          if (med > best_median) {
            best_median = med;
            best_hyper = hyper;
            best_scores = scores;
          }
        }
        for (int s = 0; s < rc.eval.seeds; ++s) runs[s].score = best_scores[s];
        extra["hyper"] = best_hyper;
        extra["hyper_medians"] = hyper_medians;
      } else {  // ours-*
        InvMode mode;
        int W;
        detail::ours_mode_window(method, rc, mode, W);
        const TrainLoopConfig tlc = detail::train_loop_config(rc, mode, W);
        PolicyFactory source_factory = make_expert_factory(rc.source, rc.ilqr, rc.gains);
        for (int s = 0; s < rc.eval.seeds; ++s) {
          const TrainLoopResult r =
              train_loop(rc.source, target, source_factory, tlc, refs, job_rng(s));
          runs[s].score = r.curve.empty() ? 0.0 : r.curve.back().score;
          runs[s].samples = sample_complexity(r.curve, rc.eval.threshold);
          runs[s].has_samples_column = true;
        }
        extra["mode"] = inv_mode_name(mode);
        extra["W"] = W;
      }

      std::vector<double> scores;
      std::vector<double> reached;
      for (int s = 0; s < rc.eval.seeds; ++s) {
        const auto& r = runs[s];
        SweepRow row;
        row.env = env_name;
        row.method = method;
        row.axis = rc.sweep.axis;
        row.value = value;
        row.seed = s;
        row.score = r.score;
        if (r.has_samples_column)
          row.samples_to_75 = r.samples ? std::to_string(*r.samples) : std::string("nr");
        csv << to_csv(row) << "\n";
        out.rows.push_back(std::move(row));
        scores.push_back(r.score);
        if (r.samples) reached.push_back(static_cast<double>(*r.samples));
      }

      json m{{"median", median(scores)},
             {"q1", quantile(scores, 0.25)},
             {"q3", quantile(scores, 0.75)},
             {"scores", scores}};
      if (runs.front().has_samples_column) {
        m["samples_to_75"] = json{{"reached", reached.size()},
                                  {"median", reached.empty()
                                                 ? json(nullptr)
                                                 : json(median(reached))}};
      }
      for (auto& [k, v] : extra.items()) m[k] = v;
      point_summary["methods"][method] = std::move(m);
    }
    out.summary["points"].push_back(std::move(point_summary));
    csv.flush();
  }
  return out;
}

}  // namespace s2r
