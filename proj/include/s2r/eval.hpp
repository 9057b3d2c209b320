#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sim.hpp"

namespace s2r {

// Returns of the source-env expert and zero policies; the affine anchors for
// normalized scores (expert -> 1, zero -> 0).
struct ScoreRefs {
  double expert_return = 0.0;
  double zero_return = 0.0;
};

inline double normalized_score(double R, const ScoreRefs& refs) {
  const double denom = refs.expert_return - refs.zero_return;
  if (!(denom > 0.0))
    throw std::invalid_argument(
        "normalized_score: expert return must exceed zero-policy return");
  const double s = (R - refs.zero_return) / denom;
  return std::min(1.5, std::max(-0.5, s));
}

// Episode return used for scoring. Episodes truncated by instability are
// charged the final step's reward for every remaining step, so bailing out
// early can never beat running the full episode.
inline double score_return(const Trajectory& traj, int episode_len) {
  double r = traj.total_reward();
  if (traj.steps() < episode_len && !traj.rew.empty())
    r += (episode_len - traj.steps()) * traj.rew.back();
  return r;
}

// One fresh policy instance per episode; episode e draws from rng.substream(e)
// so results do not depend on the episode count.
inline std::vector<double> evaluate_policy(const EnvParams& p, const PolicyFactory& factory,
                                           int episodes, const RngStream& rng) {
  std::vector<double> returns;
  returns.reserve(episodes);
  for (int e = 0; e < episodes; ++e) {
    RngStream ep_rng = rng.substream(static_cast<std::uint64_t>(e));
    Policy pol = factory();
    const Trajectory traj = rollout(p, pol, ep_rng);
    returns.push_back(score_return(traj, p.episode_len));
  }
  return returns;
}

inline double evaluate_policy_median(const EnvParams& p, const PolicyFactory& factory,
                                     int episodes, const RngStream& rng) {
  return median(evaluate_policy(p, factory, episodes, rng));
}

inline ScoreRefs compute_refs(const EnvParams& source, const PolicyFactory& expert_factory,
                              int episodes, const RngStream& rng) {
  ScoreRefs refs;
  refs.expert_return =
      evaluate_policy_median(source, expert_factory, episodes, rng.substream(1));
  PolicyFactory zero = make_zero_factory(source.act_dim());
  refs.zero_return = evaluate_policy_median(source, zero, episodes, rng.substream(2));
  return refs;
}

inline void to_json(json& j, const ScoreRefs& r) {
  j = json{{"expert_return", r.expert_return}, {"zero_return", r.zero_return}};
}

inline void from_json(const json& j, ScoreRefs& r) {
  r.expert_return = j.at("expert_return").get<double>();
  r.zero_return = j.at("zero_return").get<double>();
}

inline void save_refs(const std::string& path, const ScoreRefs& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  json j = r;
  out << j.dump(2) << "\n";
}

inline ScoreRefs load_refs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return json::parse(in).get<ScoreRefs>();
}

struct CurvePoint {
  long samples = 0;
  double score = 0.0;
};

using ScoreCurve = std::vector<CurvePoint>;

inline void check_curve(const ScoreCurve& c) {
  for (std::size_t i = 1; i < c.size(); ++i)
    if (c[i].samples <= c[i - 1].samples)
      throw std::invalid_argument("score curve sample counts must be strictly increasing");
}

// Smallest cumulative sample count at which the score crosses the threshold
// and every later 3-point moving median stays at or above it.
inline std::optional<long> sample_complexity(const ScoreCurve& curve,
                                             double threshold = 0.75) {
  check_curve(curve);
  const int n = static_cast<int>(curve.size());
  auto moving_median = [&](int j) {
    std::vector<double> w;
    for (int k = std::max(0, j - 1); k <= std::min(n - 1, j + 1); ++k)
      w.push_back(curve[k].score);
    return median(w);
  };
  for (int i = 0; i < n; ++i) {
    if (curve[i].score < threshold) continue;
    bool sustained = true;
    for (int j = i; j < n; ++j) {
      if (moving_median(j) < threshold) {
        sustained = false;
        break;
      }
    }
    if (sustained) return curve[i].samples;
  }
  return std::nullopt;
}

inline std::string curve_point_to_jsonl(const CurvePoint& p) {
  json j;
  j["samples"] = p.samples;
  j["score"] = p.score;
  return j.dump();
}

inline void save_curve(const std::string& path, const ScoreCurve& c) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& p : c) out << curve_point_to_jsonl(p) << "\n";
}

inline ScoreCurve load_curve(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  ScoreCurve c;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    c.push_back(CurvePoint{j.at("samples").get<long>(), j.at("score").get<double>()});
  }
  return c;
}

// Type-7 (linear interpolation) quantile over a copy of the data.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile of empty set");
  std::sort(v.begin(), v.end());
  const double pos = q * (static_cast<double>(v.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= v.size()) return v.back();
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

}  // namespace s2r
