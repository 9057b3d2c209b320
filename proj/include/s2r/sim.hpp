#pragma once

#include <functional>

#include "bouncer.hpp"
#include "reacher.hpp"

namespace s2r {

// A policy maps the episode so far (growing trajectory, last obs current) to
// the next commanded action. Stateful policies (warm starts, online
// adaptation) are closures; use one instance per rollout.
using Policy = std::function<Action(const Trajectory&)>;
using PolicyFactory = std::function<Policy()>;

// Stateful simulator over the pure step functions. Draw order is part of the
// determinism contract:
//   reset: env init draws (reacher: radius, angle; bouncer: none), then the
//          stationary motor-noise draw (act_dim normals when std > 0).
//   step:  AR(1) innovation draws (act_dim normals when std > 0 and rho < 1).
class Env {
 public:
  explicit Env(const EnvParams& p) : p_(p) { p_.check(); }

  const EnvParams& params() const { return p_; }

  Observation reset(RngStream& rng) {
    if (p_.kind == EnvKind::reacher2)
      rs_ = reacher_reset(p_, rng);
    else
      bs_ = bouncer_reset(p_, rng);
    noise_ = init_noise_state(p_.noise, p_.act_dim(), rng);
    return observe();
  }

  struct StepOut {
    Observation obs;
    double reward = 0.0;
    bool unstable = false;
  };

  // Takes the commanded action; motor noise is applied internally.
  StepOut step(const Action& a_cmd, RngStream& rng) {
    const Action a_exec = apply_motor_noise(clip_action(a_cmd), noise_, p_.noise, rng);
    StepOut out;
    if (p_.kind == EnvKind::reacher2) {
      const auto r = reacher_step(rs_, a_exec, p_);
      rs_ = r.state;
      out.reward = r.reward;
      out.unstable = r.unstable;
    } else {
      const auto r = bouncer_step(bs_, a_exec, p_);
      bs_ = r.state;
      out.reward = r.reward;
      out.unstable = r.unstable;
    }
    out.obs = observe();
    return out;
  }

  Observation observe() const {
    return p_.kind == EnvKind::reacher2 ? reacher_observe(rs_, p_)
                                        : bouncer_observe(bs_, p_);
  }

  ReacherState& reacher_state() { return rs_; }
  BouncerState& bouncer_state() { return bs_; }

 private:
  EnvParams p_;
  ReacherState rs_;
  BouncerState bs_;
  NoiseState noise_;
};

// Runs one episode and records observations, commanded (pre-noise) actions,
// and rewards. Truncates early if the environment reports instability.
inline Trajectory rollout(const EnvParams& p, Policy& policy, RngStream& rng) {
  Env env(p);
  Trajectory traj;
  traj.obs.push_back(env.reset(rng));
  for (int t = 0; t < p.episode_len; ++t) {
    const Action a_cmd = clip_action(policy(traj));
    const auto out = env.step(a_cmd, rng);
    traj.act.push_back(a_cmd);
    traj.obs.push_back(out.obs);
    traj.rew.push_back(out.reward);
    if (out.unstable) break;
  }
  return traj;
}

// One noise-free control step in observation space. For bouncer, the phase
// comes from t_hint when the caller tracks it (exact for trajectory step
// counts); otherwise it is inverted from the reference entries.
inline Observation step_from_obs(const EnvParams& p, const Observation& obs,
                                 const Action& a, double t_hint = std::nan("")) {
  if (p.kind == EnvKind::reacher2) {
    const ReacherState s = reacher_state_from_obs(obs, p);
    return reacher_observe(reacher_step(s, a, p).state, p);
  }
  const BouncerState s = bouncer_state_from_obs(obs, p, t_hint);
  return bouncer_observe(bouncer_step(s, a, p).state, p);
}

inline Policy zero_policy(int d_act) {
  return [d_act](const Trajectory&) { return Action::Zero(d_act); };
}

}  // namespace s2r
