#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

namespace s2r {

// Fully connected ReLU network, 64-bit floats throughout. W[i] has shape
// sizes[i+1] x sizes[i]; the output layer is linear.
struct Mlp {
  std::vector<int> sizes;
  std::vector<Mat> W;
  std::vector<Vec> b;

  int layers() const { return static_cast<int>(W.size()); }
  int in_dim() const { return sizes.front(); }
  int out_dim() const { return sizes.back(); }

  long param_count() const {
    long n = 0;
    for (int i = 0; i < layers(); ++i) n += W[i].size() + b[i].size();
    return n;
  }
};

// Glorot-uniform weights (row-major draw order), zero biases.
inline Mlp init_mlp(const std::vector<int>& sizes, RngStream& rng) {
  if (sizes.size() < 2) throw std::invalid_argument("mlp needs at least input and output sizes");
  for (int s : sizes)
    if (s < 1) throw std::invalid_argument("mlp layer sizes must be >= 1");
  Mlp m;
  m.sizes = sizes;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    const int fan_in = sizes[i], fan_out = sizes[i + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Mat w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-limit, limit);
    m.W.push_back(std::move(w));
    m.b.push_back(Vec::Zero(fan_out));
  }
  return m;
}

inline Mlp zero_mlp(const std::vector<int>& sizes) {
  Mlp m;
  m.sizes = sizes;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    m.W.push_back(Mat::Zero(sizes[i + 1], sizes[i]));
    m.b.push_back(Vec::Zero(sizes[i + 1]));
  }
  return m;
}

inline Vec mlp_forward(const Mlp& m, const Vec& x) {
  if (x.size() != m.in_dim()) throw std::invalid_argument("mlp input has wrong dimension");
  Vec h = x;
  for (int i = 0; i < m.layers(); ++i) {
    h = (m.W[i] * h + m.b[i]).eval();
    if (i + 1 < m.layers()) h = h.cwiseMax(0.0);
  }
  return h;
}

// Columns are samples.
inline Mat mlp_forward_batch(const Mlp& m, const Mat& X) {
  Mat h = X;
  for (int i = 0; i < m.layers(); ++i) {
    h = ((m.W[i] * h).colwise() + m.b[i]).eval();
    if (i + 1 < m.layers()) h = h.cwiseMax(0.0);
  }
  return h;
}

struct MlpGrads {
  std::vector<Mat> W;
  std::vector<Vec> b;
};

inline MlpGrads zero_grads(const Mlp& m) {
  MlpGrads g;
  for (int i = 0; i < m.layers(); ++i) {
    g.W.push_back(Mat::Zero(m.W[i].rows(), m.W[i].cols()));
    g.b.push_back(Vec::Zero(m.b[i].size()));
  }
  return g;
}

// Mean over the batch of 0.5 * ||f(x) - y||^2.
inline double mlp_loss(const Mlp& m, const Mat& X, const Mat& Y) {
  const Mat E = mlp_forward_batch(m, X) - Y;
  return 0.5 * E.squaredNorm() / static_cast<double>(X.cols());
}

// Backprop of mlp_loss. Returns the loss and fills grads.
inline double mlp_loss_grad(const Mlp& m, const Mat& X, const Mat& Y, MlpGrads& grads) {
  const int L = m.layers();
  const auto B = static_cast<double>(X.cols());
  std::vector<Mat> acts(L + 1);  // acts[i]: input to layer i
  acts[0] = X;
  for (int i = 0; i < L; ++i) {
    Mat z = (m.W[i] * acts[i]).colwise() + m.b[i];
    acts[i + 1] = (i + 1 < L) ? z.cwiseMax(0.0).eval() : z;
  }
  const double loss = 0.5 * (acts[L] - Y).squaredNorm() / B;
  Mat delta = (acts[L] - Y) / B;
  for (int i = L - 1; i >= 0; --i) {
    grads.W[i] = delta * acts[i].transpose();
    grads.b[i] = delta.rowwise().sum();
    if (i > 0) {
      delta = (m.W[i].transpose() * delta).eval();
      delta = delta.array() * (acts[i].array() > 0.0).cast<double>();
    }
  }
  return loss;
}

// Adam with bias correction: w -= lr * mhat / (sqrt(vhat) + eps).
struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Mat> mW, vW;
  std::vector<Vec> mb, vb;
  long t = 0;

  static AdamState init(const Mlp& m) {
    AdamState s;
    for (int i = 0; i < m.layers(); ++i) {
      s.mW.push_back(Mat::Zero(m.W[i].rows(), m.W[i].cols()));
      s.vW.push_back(Mat::Zero(m.W[i].rows(), m.W[i].cols()));
      s.mb.push_back(Vec::Zero(m.b[i].size()));
      s.vb.push_back(Vec::Zero(m.b[i].size()));
    }
    return s;
  }
};

namespace detail {
template <typename T>
void adam_update_tensor(T& w, const T& g, T& mom, T& vel, const AdamConfig& c,
                        double bc1, double bc2) {
  mom = c.beta1 * mom + (1.0 - c.beta1) * g;
  vel = (c.beta2 * vel).eval();
  vel.array() += (1.0 - c.beta2) * g.array().square();
  w.array() -= c.lr * (mom.array() / bc1) / ((vel.array() / bc2).sqrt() + c.eps);
}
}  // namespace detail

inline void adam_step(Mlp& m, const MlpGrads& g, AdamState& s, const AdamConfig& c) {
  ++s.t;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(s.t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(s.t));
  for (int i = 0; i < m.layers(); ++i) {
    detail::adam_update_tensor(m.W[i], g.W[i], s.mW[i], s.vW[i], c, bc1, bc2);
    detail::adam_update_tensor(m.b[i], g.b[i], s.mb[i], s.vb[i], c, bc1, bc2);
  }
}

// Per-dimension standardization fitted on the training inputs. Population
// standard deviation, floored so constant dims stay finite.
struct Normalizer {
  Vec mu;
  Vec sigma;

  static constexpr double kSigmaFloor = 1e-6;

  static Normalizer fit(const Mat& X) {
    if (X.cols() < 1) throw std::invalid_argument("normalizer needs at least one sample");
    Normalizer n;
    n.mu = X.rowwise().mean();
    Mat centered = X.colwise() - n.mu;
    n.sigma = (centered.array().square().rowwise().mean()).sqrt().matrix();
    n.sigma = n.sigma.cwiseMax(kSigmaFloor);
    return n;
  }

  Vec apply(const Vec& x) const { return (x - mu).cwiseQuotient(sigma); }

  Mat apply_batch(const Mat& X) const {
    return (X.colwise() - mu).array().colwise() / sigma.array();
  }
};

inline json mlp_to_json(const Mlp& m) {
  json j;
  j["sizes"] = m.sizes;
  j["weights"] = json::array();
  j["biases"] = json::array();
  for (int i = 0; i < m.layers(); ++i) {
    j["weights"].push_back(mat_to_rowmajor_json(m.W[i]));
    j["biases"].push_back(vec_to_json(m.b[i]));
  }
  return j;
}

inline Mlp mlp_from_json(const json& j) {
  Mlp m;
  m.sizes = j.at("sizes").get<std::vector<int>>();
  const auto& ws = j.at("weights");
  const auto& bs = j.at("biases");
  if (ws.size() + 1 != m.sizes.size() || bs.size() + 1 != m.sizes.size())
    throw std::invalid_argument("mlp json layer count does not match sizes");
  for (std::size_t i = 0; i + 1 < m.sizes.size(); ++i) {
    m.W.push_back(mat_from_rowmajor_json(ws[i], m.sizes[i + 1], m.sizes[i]));
    m.b.push_back(vec_from_json(bs[i]));
  }
  return m;
}

}  // namespace s2r
