#pragma once

#include <cmath>

#include "envs.hpp"

namespace s2r {

// Point mass on a vertical rail above a bouncy floor, driven by a thrust
// force. The task is to track a rest-then-hop reference height.
struct BouncerState {
  double y = 0.05;
  double v = 0.0;
  double t = 0.0;  // episode time (s), advanced by control_dt per step
};

constexpr double kBouncerRefHeight = 0.5;
constexpr double kBouncerRefPeriod = 1.0;

// Reference: half-sine hops, clipped at zero during the second half-period.
inline double bouncer_ref(double t) {
  return kBouncerRefHeight *
         std::max(0.0, std::sin(2.0 * M_PI * t / kBouncerRefPeriod));
}

struct BouncerStepResult {
  BouncerState state;
  double reward = 0.0;
  bool unstable = false;  // bouncer never truncates; kept for a uniform interface
};

// One control step: `substeps` semi-implicit Euler substeps with an
// inelastic-floor event (y clamped to 0, downward velocity reflected by the
// restitution coefficient). Reward is -|y - y_ref| after the step.
inline BouncerStepResult bouncer_step(BouncerState s, const Action& action,
                                      const EnvParams& p) {
  const Action a = clip_action(action);
  const double force = p.torque_scale * p.torque_max * a[0];
  const double grav = p.g * p.gravity_scale;
  for (int k = 0; k < p.substeps; ++k) {
    s.v += p.dt * (force / p.mass - grav);
    s.y += p.dt * s.v;
    if (s.y < 0.0) {
      s.y = 0.0;
      if (s.v < 0.0) s.v = -p.restitution * s.v;
    }
  }
  s.t += p.control_dt();
  BouncerStepResult out;
  out.state = s;
  out.reward = -std::abs(s.y - bouncer_ref(s.t));
  return out;
}

// Observation: [y, v, y_ref(t), y_ref(t + control_dt)]. The reference pair
// lets a memoryless controller difference out the reference velocity.
inline Observation bouncer_observe(const BouncerState& s, const EnvParams& p) {
  Observation o(4);
  o[0] = s.y;
  o[1] = s.v;
  o[2] = bouncer_ref(s.t);
  o[3] = bouncer_ref(s.t + p.control_dt());
  return o;
}

// Recovers state from an observation. The phase is taken from t_hint when
// given (callers tracking a trajectory know the step count exactly); otherwise
// it is inverted from the reference samples, with the convention t = P/2 when
// both samples sit in the clipped flat phase.
inline BouncerState bouncer_state_from_obs(const Observation& o, const EnvParams& p,
                                           double t_hint = std::nan("")) {
  if (o.size() != 4) throw std::invalid_argument("bouncer observation must have 4 dims");
  BouncerState s;
  s.y = std::max(0.0, o[0]);
  s.v = o[1];
  if (std::isfinite(t_hint)) {
    s.t = t_hint;
    return s;
  }
  const double P = kBouncerRefPeriod;
  const double a1 = std::min(1.0, std::max(0.0, o[2] / kBouncerRefHeight));
  const double a2 = std::min(1.0, std::max(0.0, o[3] / kBouncerRefHeight));
  if (a1 <= 1e-12 && a2 <= 1e-12) {
    s.t = 0.5 * P;
    return s;
  }
  const double th = std::asin(a1);  // [0, pi/2]
  const double ta = th / (2.0 * M_PI) * P;
  const double tb = (M_PI - th) / (2.0 * M_PI) * P;
  const double ea = std::abs(bouncer_ref(ta + p.control_dt()) - o[3]);
  const double eb = std::abs(bouncer_ref(tb + p.control_dt()) - o[3]);
  s.t = (ea <= eb) ? ta : tb;
  return s;
}

inline BouncerState bouncer_reset(const EnvParams&, RngStream&) {
  return BouncerState{};  // y = 0.05, v = 0, t = 0; no randomness
}

}  // namespace s2r
