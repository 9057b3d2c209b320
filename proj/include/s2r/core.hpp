#pragma once

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace s2r {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Observation = Vec;
using Action = Vec;
using json = nlohmann::json;

// Episode record. obs has one more entry than act/rew: obs[t], act[t]
// lead to obs[t+1] with reward rew[t].
struct Trajectory {
  std::vector<Observation> obs;
  std::vector<Action> act;
  std::vector<double> rew;

  int steps() const { return static_cast<int>(act.size()); }

  void check() const {
    if (obs.size() != act.size() + 1 || rew.size() != act.size())
      throw std::invalid_argument(
          "trajectory invariant violated: need len(obs) == len(act)+1 == len(rew)+1");
  }

  double total_reward() const {
    double s = 0.0;
    for (double r : rew) s += r;
    return s;
  }
};

// The most recent W transitions: W+1 observations and W actions.
struct Window {
  std::vector<Observation> obs;
  std::vector<Action> act;

  int size() const { return static_cast<int>(act.size()); }

  void check() const {
    if (obs.size() != act.size() + 1)
      throw std::invalid_argument("window invariant violated: need len(obs) == len(act)+1");
  }
};

// Last W transitions of a trajectory. Requires steps() >= W.
inline Window tail_window(const Trajectory& traj, int W) {
  if (W < 0) throw std::invalid_argument("tail_window: W must be >= 0");
  if (traj.steps() < W)
    throw std::invalid_argument("tail_window: trajectory has fewer than W transitions");
  Window w;
  const int n = traj.steps();
  for (int t = n - W; t <= n; ++t) w.obs.push_back(traj.obs.at(t));
  for (int t = n - W; t < n; ++t) w.act.push_back(traj.act.at(t));
  return w;
}

// Like tail_window, but short histories are padded on the left by repeating
// the earliest observation with zero actions, so episode starts are usable.
// A trajectory with no actions yet cannot reveal the action dimension, so
// callers that need fixed-width windows pass d_act explicitly.
inline Window pad_window(const Trajectory& traj, int W, int d_act = -1) {
  if (W < 0) throw std::invalid_argument("pad_window: W must be >= 0");
  if (traj.obs.empty()) throw std::invalid_argument("pad_window: empty trajectory");
  if (traj.steps() >= W) return tail_window(traj, W);
  Window w;
  const int missing = W - traj.steps();
  if (!traj.act.empty()) d_act = static_cast<int>(traj.act.front().size());
  for (int i = 0; i < missing; ++i) w.obs.push_back(traj.obs.front());
  for (const auto& o : traj.obs) w.obs.push_back(o);
  for (int i = 0; i < missing; ++i)
    w.act.push_back(Action::Zero(d_act > 0 ? d_act : 0));
  for (const auto& a : traj.act) w.act.push_back(a);
  return w;
}

// Clips each entry to [-1, 1] and canonicalizes -0.0 to +0.0 so equal-valued
// actions are also bit-identical.
inline Action clip_action(Action a) {
  for (int i = 0; i < a.size(); ++i) {
    double x = std::min(1.0, std::max(-1.0, a[i]));
    a[i] = (x == 0.0) ? 0.0 : x;
  }
  return a;
}

inline json vec_to_json(const Vec& v) {
  json j = json::array();
  for (int i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

inline Vec vec_from_json(const json& j) {
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
  return v;
}

inline Mat mat_from_rowmajor_json(const json& j, int rows, int cols) {
  if (static_cast<int>(j.size()) != rows * cols)
    throw std::invalid_argument("matrix json has wrong element count");
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = j[static_cast<std::size_t>(r) * cols + c].get<double>();
  return m;
}

inline json mat_to_rowmajor_json(const Mat& m) {
  json j = json::array();
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) j.push_back(m(r, c));
  return j;
}

// One trajectory per line: {"obs": [[...]], "act": [[...]], "rew": [...]}.
inline std::string trajectory_to_jsonl(const Trajectory& traj) {
  traj.check();
  json j;
  j["obs"] = json::array();
  for (const auto& o : traj.obs) j["obs"].push_back(vec_to_json(o));
  j["act"] = json::array();
  for (const auto& a : traj.act) j["act"].push_back(vec_to_json(a));
  j["rew"] = traj.rew;
  return j.dump();
}

inline Trajectory trajectory_from_jsonl(const std::string& line) {
  json j = json::parse(line);
  Trajectory traj;
  for (const auto& o : j.at("obs")) traj.obs.push_back(vec_from_json(o));
  for (const auto& a : j.at("act")) traj.act.push_back(vec_from_json(a));
  traj.rew = j.at("rew").get<std::vector<double>>();
  traj.check();
  return traj;
}

inline void save_trajectories(const std::string& path, const std::vector<Trajectory>& trajs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& t : trajs) out << trajectory_to_jsonl(t) << "\n";
}

inline std::vector<Trajectory> load_trajectories(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::vector<Trajectory> trajs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    trajs.push_back(trajectory_from_jsonl(line));
  }
  return trajs;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace s2r
