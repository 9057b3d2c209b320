#pragma once

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "nn.hpp"
#include "sim.hpp"

namespace s2r {

enum class InvMode { direct, correction };

inline std::string inv_mode_name(InvMode m) {
  return m == InvMode::direct ? "direct" : "correction";
}

inline InvMode inv_mode_from_name(const std::string& s) {
  if (s == "direct") return InvMode::direct;
  if (s == "correction") return InvMode::correction;
  throw std::invalid_argument("unknown inverse-model mode: " + s);
}

// One supervised pair: history window plus achieved next observation on the
// input side, executed action (or its offset from the source action) as label.
struct InvSample {
  Vec input;
  Vec label;
};

inline int inv_input_dim(int W, int d_obs, int d_act) {
  return (W + 2) * d_obs + W * d_act;
}

inline Vec assemble_input(const Window& w, const Observation& o_next) {
  w.check();
  const int W = w.size();
  const int d_obs = static_cast<int>(o_next.size());
  const int d_act = W > 0 ? static_cast<int>(w.act.front().size()) : 0;
  Vec x(inv_input_dim(W, d_obs, W > 0 ? d_act : 0));
  int at = 0;
  for (const auto& o : w.obs) {
    x.segment(at, o.size()) = o;
    at += static_cast<int>(o.size());
  }
  for (const auto& a : w.act) {
    x.segment(at, a.size()) = a;
    at += static_cast<int>(a.size());
  }
  x.segment(at, o_next.size()) = o_next;
  return x;
}

// A collected transition annotated with what the source policy would have
// done, so correction labels can be formed.
struct LabeledStep {
  Window window;       // history ending at the step's observation
  Observation o_next;  // achieved next observation
  Action a_exec;       // commanded action actually fed to the dynamics
  Action a_source;     // source policy's action at the same point
};

inline InvSample to_sample(const LabeledStep& s, InvMode mode) {
  InvSample out;
  out.input = assemble_input(s.window, s.o_next);
  out.label = (mode == InvMode::correction) ? (s.a_exec - s.a_source).eval() : s.a_exec;
  return out;
}

inline std::vector<InvSample> to_samples(const std::vector<LabeledStep>& steps,
                                         InvMode mode) {
  std::vector<InvSample> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(to_sample(s, mode));
  return out;
}

// Direct-mode samples from plain trajectories: one per action, padded windows
// at episode starts.
inline std::vector<InvSample> build_dataset(const std::vector<Trajectory>& trajs, int W) {
  std::vector<InvSample> out;
  for (const auto& traj : trajs) {
    traj.check();
    const int d_act = traj.act.empty() ? 0 : static_cast<int>(traj.act.front().size());
    Trajectory prefix;
    prefix.obs.push_back(traj.obs[0]);
    for (int t = 0; t < traj.steps(); ++t) {
      InvSample s;
      s.input = assemble_input(pad_window(prefix, W, d_act), traj.obs[t + 1]);
      s.label = traj.act[t];
      out.push_back(std::move(s));
      prefix.obs.push_back(traj.obs[t + 1]);
      prefix.act.push_back(traj.act[t]);
      prefix.rew.push_back(traj.rew[t]);
    }
  }
  return out;
}

struct InverseModel {
  Mlp mlp;
  Normalizer norm;
  int W = 2;
  InvMode mode = InvMode::direct;
};

// Zero-weight model: in correction mode it reproduces the source action
// exactly, which is the bootstrap for the first collection iteration.
inline InverseModel zero_inverse_model(int W, int d_obs, int d_act, InvMode mode,
                                       const std::vector<int>& hidden = {256, 256}) {
  InverseModel m;
  std::vector<int> sizes{inv_input_dim(W, d_obs, d_act)};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(d_act);
  m.mlp = zero_mlp(sizes);
  m.norm.mu = Vec::Zero(sizes.front());
  m.norm.sigma = Vec::Ones(sizes.front());
  m.W = W;
  m.mode = mode;
  return m;
}

struct TrainConfig {
  int epochs = 40;
  int batch = 128;
  std::vector<int> hidden = {256, 256};
  AdamConfig adam;
  double val_frac = 0.1;
  bool early_stop = true;
  int patience = 5;
};

struct TrainReport {
  double final_train_mse = 0.0;
  double best_val_mse = 0.0;
  double label_variance = 0.0;  // mean per-dim variance
  int epochs_run = 0;
};

// Fits the normalizer on all inputs, holds out the last val_frac of samples,
// runs minibatch Adam on mean 0.5*||err||^2, and keeps the best-validation
// snapshot (plain final model when the dataset is too small to split).
inline InverseModel train(const std::vector<InvSample>& dataset, int W, InvMode mode,
                          const TrainConfig& cfg, RngStream rng,
                          TrainReport* report = nullptr) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  const int n = static_cast<int>(dataset.size());
  const int d_in = static_cast<int>(dataset.front().input.size());
  const int d_out = static_cast<int>(dataset.front().label.size());

  Mat X(d_in, n), Y(d_out, n);
  for (int i = 0; i < n; ++i) {
    if (dataset[i].input.size() != d_in || dataset[i].label.size() != d_out)
      throw std::invalid_argument("train: inconsistent sample shapes");
    X.col(i) = dataset[i].input;
    Y.col(i) = dataset[i].label;
  }

  InverseModel model;
  model.W = W;
  model.mode = mode;
  model.norm = Normalizer::fit(X);
  const Mat Xn = model.norm.apply_batch(X);

  const int n_val = (n >= 10) ? n / 10 : 0;
  const int n_train = n - n_val;
  const Mat Xtr = Xn.leftCols(n_train), Ytr = Y.leftCols(n_train);
  const Mat Xva = Xn.rightCols(n_val), Yva = Y.rightCols(n_val);

  std::vector<int> sizes{d_in};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(d_out);
  model.mlp = init_mlp(sizes, rng);

  AdamState adam = AdamState::init(model.mlp);
  MlpGrads grads = zero_grads(model.mlp);

  Mlp best = model.mlp;
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  double train_mse = 0.0;
  int epochs_run = 0;

  const int batch = std::max(1, cfg.batch);
  Mat Xb(d_in, batch), Yb(d_out, batch);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    epochs_run = epoch + 1;
    const std::vector<int> order = rng.permutation(n_train);
    double loss_sum = 0.0;
    long seen = 0;
    for (int start = 0; start < n_train; start += batch) {
      const int bs = std::min(batch, n_train - start);
      for (int i = 0; i < bs; ++i) {
        Xb.col(i) = Xtr.col(order[start + i]);
        Yb.col(i) = Ytr.col(order[start + i]);
      }
      const auto Xview = Xb.leftCols(bs);
      const auto Yview = Yb.leftCols(bs);
      loss_sum += mlp_loss_grad(model.mlp, Xview, Yview, grads) * bs;
      seen += bs;
      adam_step(model.mlp, grads, adam, cfg.adam);
    }
    train_mse = 2.0 * loss_sum / static_cast<double>(seen);  // mean ||err||^2

    if (n_val > 0) {
      const double val = 2.0 * mlp_loss(model.mlp, Xva, Yva);
      if (val < best_val) {
        best_val = val;
        best = model.mlp;
        since_best = 0;
      } else if (++since_best >= cfg.patience && cfg.early_stop) {
        break;
      }
    } else {
      best = model.mlp;
    }
  }
  if (n_val > 0) model.mlp = best;

  if (report) {
    report->final_train_mse = train_mse;
    report->best_val_mse = (n_val > 0) ? best_val : train_mse;
    Vec label_mean = Y.rowwise().mean();
    report->label_variance =
        (Y.colwise() - label_mean).array().square().mean();
    report->epochs_run = epochs_run;
  }
  return model;
}

// direct: clip(mlp(x)); correction: clip(a_source + mlp(x)).
inline Action query(const InverseModel& m, const Window& w, const Observation& o_next,
                    const Action& a_source = Action()) {
  if (w.size() != m.W)
    throw std::invalid_argument("query: window size does not match the model's W");
  const Vec x = assemble_input(w, o_next);
  if (x.size() != m.mlp.in_dim())
    throw std::invalid_argument("query: input dimension does not match the model");
  const Vec out = mlp_forward(m.mlp, m.norm.apply(x));
  if (m.mode == InvMode::correction) {
    if (a_source.size() != out.size())
      throw std::invalid_argument("query: correction mode needs a_source");
    return clip_action(a_source + out);
  }
  return clip_action(out);
}

inline json inverse_model_to_json(const InverseModel& m) {
  json j = mlp_to_json(m.mlp);
  j["mu"] = vec_to_json(m.norm.mu);
  j["sigma"] = vec_to_json(m.norm.sigma);
  j["W"] = m.W;
  j["mode"] = inv_mode_name(m.mode);
  return j;
}

inline InverseModel inverse_model_from_json(const json& j) {
  InverseModel m;
  m.mlp = mlp_from_json(j);
  m.norm.mu = vec_from_json(j.at("mu"));
  m.norm.sigma = vec_from_json(j.at("sigma"));
  m.W = j.at("W").get<int>();
  m.mode = inv_mode_from_name(j.at("mode").get<std::string>());
  if (m.mlp.in_dim() != m.norm.mu.size())
    throw std::invalid_argument("inverse model checkpoint: normalizer/mlp dim mismatch");
  return m;
}

inline void save_inverse_model(const std::string& path, const InverseModel& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << inverse_model_to_json(m).dump() << "\n";
}

inline InverseModel load_inverse_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  json j = json::parse(in);
  return inverse_model_from_json(j);
}

inline std::string inv_sample_to_jsonl(const InvSample& s) {
  json j;
  j["input"] = vec_to_json(s.input);
  j["label"] = vec_to_json(s.label);
  return j.dump();
}

inline InvSample inv_sample_from_jsonl(const std::string& line) {
  json j = json::parse(line);
  return InvSample{vec_from_json(j.at("input")), vec_from_json(j.at("label"))};
}

inline void save_samples(const std::string& path, const std::vector<InvSample>& samples) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& s : samples) out << inv_sample_to_jsonl(s) << "\n";
}

inline std::vector<InvSample> load_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::vector<InvSample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(inv_sample_from_jsonl(line));
  }
  return out;
}

}  // namespace s2r
