#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>

#include "core.hpp"

namespace s2r {

// Deterministic one-step dynamics in observation space.
struct DynamicsFn {
  std::function<Vec(const Vec&, const Vec&)> f;
  int d_obs = 0;
  int d_act = 0;
};

// Stage cost (o - target)' Q (o - target) + a' R a, terminal with Qf.
struct QuadCost {
  Mat Q;
  Mat R;
  Mat Qf;
  Vec target;

  double stage(const Vec& o, const Vec& a) const {
    const Vec e = o - target;
    return e.dot(Q * e) + a.dot(R * a);
  }
  double terminal(const Vec& o) const {
    const Vec e = o - target;
    return e.dot(Qf * e);
  }
};

struct IlqrConfig {
  int horizon = 20;
  int max_iters = 50;
  double mu_init = 1e-6;
  double mu_factor = 10.0;
  double mu_max = 1e10;
  double tol = 1e-6;      // relative cost improvement
  double fd_h = 1e-5;     // central-difference step for linearization
  int line_search_steps = 11;  // alpha = 1, 1/2, ..., 2^-10
};

struct IlqrResult {
  std::vector<Vec> actions;   // clipped, length horizon
  std::vector<Vec> states;    // length horizon + 1
  std::vector<Mat> gains;     // feedback K_t
  std::vector<Vec> feedforward;
  double cost = 0.0;
  bool converged = false;
  int iterations = 0;
};

namespace detail {

inline double ilqr_rollout(const DynamicsFn& dyn, const QuadCost& cost, const Vec& x0,
                           std::vector<Vec>& U, std::vector<Vec>& X) {
  const int N = static_cast<int>(U.size());
  X.assign(static_cast<std::size_t>(N) + 1, Vec());
  X[0] = x0;
  double c = 0.0;
  for (int t = 0; t < N; ++t) {
    U[t] = clip_action(U[t]);
    c += cost.stage(X[t], U[t]);
    X[t + 1] = dyn.f(X[t], U[t]);
  }
  c += cost.terminal(X[N]);
  return c;
}

inline void linearize(const DynamicsFn& dyn, const Vec& x, const Vec& u, double h,
                      Mat& A, Mat& B) {
  const int n = dyn.d_obs, m = dyn.d_act;
  A.resize(n, n);
  B.resize(n, m);
  Vec xp = x, xm = x, up = u, um = u;
  for (int j = 0; j < n; ++j) {
    xp[j] += h;
    xm[j] -= h;
    A.col(j) = (dyn.f(xp, u) - dyn.f(xm, u)) / (2.0 * h);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  for (int j = 0; j < m; ++j) {
    up[j] += h;
    um[j] -= h;
    B.col(j) = (dyn.f(x, up) - dyn.f(x, um)) / (2.0 * h);
    up[j] = u[j];
    um[j] = u[j];
  }
}

}  // namespace detail

// Iterative LQR with Levenberg-style regularization of Q_uu and a backtracking
// line search that accepts any cost decrease. Actions are clipped to [-1, 1]
// inside rollouts only; the backward pass is unconstrained.
inline IlqrResult ilqr(const DynamicsFn& dyn, const QuadCost& cost, const Vec& x0,
                       std::vector<Vec> U_init, const IlqrConfig& cfg = {}) {
  if (x0.size() != dyn.d_obs) throw std::invalid_argument("ilqr: x0 has wrong dimension");
  const int N = cfg.horizon;
  std::vector<Vec> U = std::move(U_init);
  U.resize(static_cast<std::size_t>(N), Vec::Zero(dyn.d_act));
  for (auto& u : U)
    if (u.size() != dyn.d_act) u = Vec::Zero(dyn.d_act);

  std::vector<Vec> X;
  double total_cost = detail::ilqr_rollout(dyn, cost, x0, U, X);

  IlqrResult res;
  res.gains.assign(N, Mat::Zero(dyn.d_act, dyn.d_obs));
  res.feedforward.assign(N, Vec::Zero(dyn.d_act));

  double mu = cfg.mu_init;
  std::vector<Mat> A(N), B(N), K(N);
  std::vector<Vec> k(N);

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    res.iterations = iter + 1;
    for (int t = 0; t < N; ++t) detail::linearize(dyn, X[t], U[t], cfg.fd_h, A[t], B[t]);

    // Backward pass; on an indefinite Q_uu, bump mu and restart it.
    bool backward_ok = false;
    double dV1 = 0.0, dV2 = 0.0;
    while (!backward_ok) {
      backward_ok = true;
      dV1 = dV2 = 0.0;
      Vec Vx = 2.0 * cost.Qf * (X[N] - cost.target);
      Mat Vxx = 2.0 * cost.Qf;
      for (int t = N - 1; t >= 0; --t) {
        const Vec cx = 2.0 * cost.Q * (X[t] - cost.target);
        const Vec cu = 2.0 * cost.R * U[t];
        const Mat Qxx = 2.0 * cost.Q + A[t].transpose() * Vxx * A[t];
        const Mat Quu = 2.0 * cost.R + B[t].transpose() * Vxx * B[t];
        const Mat Qux = B[t].transpose() * Vxx * A[t];
        const Vec Qx = cx + A[t].transpose() * Vx;
        const Vec Qu = cu + B[t].transpose() * Vx;

        Mat Quu_reg = Quu + mu * Mat::Identity(dyn.d_act, dyn.d_act);
        Eigen::LLT<Mat> llt(Quu_reg);
        if (llt.info() != Eigen::Success) {
          mu *= cfg.mu_factor;
          if (mu > cfg.mu_max) {
            res.actions = U;
            res.states = X;
            res.cost = total_cost;
            res.converged = false;
            return res;
          }
          backward_ok = false;
          break;
        }
        k[t] = -llt.solve(Qu);
        K[t] = -llt.solve(Qux);

        dV1 += k[t].dot(Qu);
        dV2 += 0.5 * k[t].dot(Quu * k[t]);

        Vx = Qx + K[t].transpose() * Quu * k[t] + K[t].transpose() * Qu +
             Qux.transpose() * k[t];
        Vxx = Qxx + K[t].transpose() * Quu * K[t] + K[t].transpose() * Qux +
              Qux.transpose() * K[t];
        Vxx = 0.5 * (Vxx + Vxx.transpose()).eval();
      }
    }

    res.gains = K;
    res.feedforward = k;

    // A vanishing predicted improvement means the nominal is already optimal.
    if (std::abs(dV1 + dV2) < cfg.tol * (std::abs(total_cost) + 1e-12)) {
      res.converged = true;
      break;
    }

    bool accepted = false;
    double alpha = 1.0;
    for (int ls = 0; ls < cfg.line_search_steps; ++ls, alpha *= 0.5) {
      std::vector<Vec> U_try(static_cast<std::size_t>(N));
      std::vector<Vec> X_try(static_cast<std::size_t>(N) + 1);
      X_try[0] = x0;
      double c_try = 0.0;
      for (int t = 0; t < N; ++t) {
        U_try[t] = clip_action(U[t] + alpha * k[t] + K[t] * (X_try[t] - X[t]));
        c_try += cost.stage(X_try[t], U_try[t]);
        X_try[t + 1] = dyn.f(X_try[t], U_try[t]);
      }
      c_try += cost.terminal(X_try[N]);
      if (c_try < total_cost) {
        const double improvement = total_cost - c_try;
        U = std::move(U_try);
        X = std::move(X_try);
        total_cost = c_try;
        accepted = true;
        mu = std::max(cfg.mu_init, mu / cfg.mu_factor);
        if (improvement <= cfg.tol * (std::abs(total_cost) + 1e-12)) {
          res.converged = true;
        }
        break;
      }
    }

    if (!accepted) {
      mu *= cfg.mu_factor;
      if (mu > cfg.mu_max) break;
      continue;
    }
    if (res.converged) break;
  }

  res.actions = U;
  res.states = X;
  res.cost = total_cost;
  return res;
}

// Shifts a plan one step forward, repeating the final action.
inline std::vector<Vec> shift_plan(std::vector<Vec> plan) {
  if (plan.empty()) return plan;
  for (std::size_t t = 0; t + 1 < plan.size(); ++t) plan[t] = plan[t + 1];
  return plan;
}

// Receding-horizon step: solve from `obs` starting at `warm` (padded or
// cropped to the horizon), return the first action plus the solution shifted
// by one step as the next warm start.
struct MpcOut {
  Action action;
  std::vector<Vec> warm;
  bool converged = false;
};

inline MpcOut mpc_action(const DynamicsFn& dyn, const QuadCost& cost, const Vec& obs,
                         std::vector<Vec> warm, const IlqrConfig& cfg = {}) {
  IlqrResult r = ilqr(dyn, cost, obs, std::move(warm), cfg);
  return MpcOut{r.actions.front(), shift_plan(r.actions), r.converged};
}

}  // namespace s2r
