#pragma once

#include <memory>
#include <optional>

#include <Eigen/Dense>

#include "experts.hpp"

namespace s2r {

// ---------------------------------------------------------------------------
// Output Error Control: adapt the source dynamics with an exponentially
// decayed offset of observed one-step prediction errors, then plan with MPC.

struct OecConfig {
  double gamma = 0.2;  // error-averaging rate
  std::vector<double> gamma_grid = {0.1, 0.2, 0.5};
};

inline Vec oec_update(const Vec& e, double gamma, const Vec& observed, const Vec& predicted) {
  return (1.0 - gamma) * e + gamma * (observed - predicted);
}

inline PolicyFactory make_oec_factory(const EnvParams& source, double gamma,
                                      const IlqrConfig& cfg = {}) {
  EnvParams src = source;
  src.noise = NoiseParams{};
  return [src, gamma, cfg]() -> Policy {
    struct State {
      Vec e;
      std::optional<Observation> prev_obs;
      Action prev_act;
      std::vector<Vec> warm;
    };
    auto st = std::make_shared<State>();
    auto dyn = std::make_shared<DynamicsFn>(env_dynamics(src));
    auto cost = std::make_shared<QuadCost>(env_tracking_cost(src));
    return [st, dyn, cost, src, gamma, cfg](const Trajectory& traj) {
      const Observation& o = traj.obs.back();
      if (traj.act.empty()) {
        st->e = Vec::Zero(src.obs_dim());
        st->prev_obs.reset();
        st->warm.clear();
      } else if (st->prev_obs) {
        const double t_prev = (traj.steps() - 1) * src.control_dt();
        const Vec predicted = step_from_obs(src, *st->prev_obs, st->prev_act, t_prev);
        st->e = oec_update(st->e, gamma, o, predicted);
      }
      DynamicsFn adapted;
      adapted.d_obs = dyn->d_obs;
      adapted.d_act = dyn->d_act;
      const Vec offset = st->e;
      adapted.f = [dyn, offset](const Vec& x, const Vec& u) {
        return (dyn->f(x, u) + offset).eval();
      };
      MpcOut out = mpc_action(adapted, *cost, o, st->warm, cfg);
      st->warm = std::move(out.warm);
      st->prev_obs = o;
      st->prev_act = out.action;
      return out.action;
    };
  };
}

// ---------------------------------------------------------------------------
// Gaussian Dynamics Adaptation: maintain a joint Gaussian over z = (o, a, o'),
// seeded from source-simulator sweeps, updated online with exponential
// forgetting, and conditioned into linear dynamics o' = F (o, a) + f for MPC.

struct GdaConfig {
  double forget = 0.05;  // weight w on each new transition
  std::vector<double> forget_grid = {0.02, 0.05, 0.2};
  double ridge = 1e-6;
  int prior_samples = 200;
  double prior_obs_std = 0.1;
  double pseudo_count = 10.0;  // declared but unused by the update recursion
};

struct JointGaussian {
  Vec mu;
  Mat sigma;
  int d_obs = 0;
  int d_act = 0;

  int dim() const { return 2 * d_obs + d_act; }
};

// Monte Carlo moments of (o, a, T(o, a)) with o ~ N(center, prior_obs_std^2 I)
// and a uniform over the actuator box.
inline JointGaussian gda_prior(const DynamicsFn& dyn, const Vec& center,
                               const GdaConfig& cfg, RngStream rng) {
  const int n = cfg.prior_samples;
  if (n < 2) throw std::invalid_argument("gda prior needs at least 2 samples");
  JointGaussian g;
  g.d_obs = dyn.d_obs;
  g.d_act = dyn.d_act;
  const int D = g.dim();
  Mat Z(D, n);
  for (int i = 0; i < n; ++i) {
    const Vec o = center + cfg.prior_obs_std * rng.normal_vector(dyn.d_obs);
    const Vec a = rng.uniform_vector(dyn.d_act, -1.0, 1.0);
    Vec z(D);
    z << o, a, dyn.f(o, a);
    Z.col(i) = z;
  }
  g.mu = Z.rowwise().mean();
  const Mat C = Z.colwise() - g.mu;
  g.sigma = (C * C.transpose()) / static_cast<double>(n) +
            cfg.ridge * Mat::Identity(D, D);
  return g;
}

// mu <- (1-w) mu + w z;  Sigma <- (1-w) Sigma + w (z-mu')(z-mu')' + ridge I.
inline void gda_update(JointGaussian& g, const Vec& z, double w, double ridge) {
  if (z.size() != g.dim()) throw std::invalid_argument("gda_update: z has wrong dimension");
  g.mu = (1.0 - w) * g.mu + w * z;
  const Vec d = z - g.mu;
  g.sigma = (1.0 - w) * g.sigma + w * (d * d.transpose());
  g.sigma.diagonal().array() += ridge;
  g.sigma = (0.5 * (g.sigma + g.sigma.transpose())).eval();
}

struct GdaConditional {
  Mat F;        // d_obs x (d_obs + d_act)
  Vec f;        // d_obs
  Mat residual; // d_obs x d_obs
};

inline GdaConditional gda_condition(const JointGaussian& g) {
  const int dx = g.d_obs + g.d_act, dy = g.d_obs;
  const Mat Sxx = g.sigma.topLeftCorner(dx, dx);
  const Mat Sxy = g.sigma.topRightCorner(dx, dy);
  const Mat Syy = g.sigma.bottomRightCorner(dy, dy);
  GdaConditional c;
  c.F = Sxx.ldlt().solve(Sxy).transpose();
  c.f = g.mu.tail(dy) - c.F * g.mu.head(dx);
  c.residual = Syy - c.F * Sxy;
  c.residual = (0.5 * (c.residual + c.residual.transpose())).eval();
  return c;
}

inline PolicyFactory make_gda_factory(const EnvParams& source, const GdaConfig& gcfg,
                                      const IlqrConfig& cfg, const RngStream& prior_rng) {
  EnvParams src = source;
  src.noise = NoiseParams{};
  return [src, gcfg, cfg, prior_rng]() -> Policy {
    struct State {
      std::optional<JointGaussian> g;
      std::optional<Observation> prev_obs;
      Action prev_act;
      std::vector<Vec> warm;
    };
    auto st = std::make_shared<State>();
    auto dyn = std::make_shared<DynamicsFn>(env_dynamics(src));
    auto cost = std::make_shared<QuadCost>(env_tracking_cost(src));
    return [st, dyn, cost, src, gcfg, cfg, prior_rng](const Trajectory& traj) {
      const Observation& o = traj.obs.back();
      if (traj.act.empty()) {
        st->g = gda_prior(*dyn, o, gcfg, prior_rng);  // recentered every episode
        st->prev_obs.reset();
        st->warm.clear();
      } else if (st->prev_obs) {
        Vec z(st->g->dim());
        z << *st->prev_obs, st->prev_act, o;
        gda_update(*st->g, z, gcfg.forget, gcfg.ridge);
      }
      const GdaConditional cond = gda_condition(*st->g);
      DynamicsFn adapted;
      adapted.d_obs = dyn->d_obs;
      adapted.d_act = dyn->d_act;
      const Mat F = cond.F;
      const Vec f0 = cond.f;
      adapted.f = [F, f0](const Vec& x, const Vec& u) {
        Vec xu(x.size() + u.size());
        xu << x, u;
        return (F * xu + f0).eval();
      };
      MpcOut out = mpc_action(adapted, *cost, o, st->warm, cfg);
      st->warm = std::move(out.warm);
      st->prev_obs = o;
      st->prev_act = out.action;
      return out.action;
    };
  };
}

// The untouched source policy run directly in the target env.
inline PolicyFactory make_expert_direct_factory(const EnvParams& source,
                                                const IlqrConfig& cfg = {},
                                                BouncerGains gains = {}) {
  return make_expert_factory(source, cfg, gains);
}

}  // namespace s2r
