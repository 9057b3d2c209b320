#pragma once

#include <cmath>

#include "envs.hpp"

namespace s2r {

// Two-link planar arm with point masses at the elbow and the tip. The plane
// can be tilted out of horizontal, which puts the in-plane gravity component
// at g * gravity_scale * sin(plane_tilt) along -y.
struct ReacherState {
  double th1 = 0.0, th2 = 0.0;  // th2 relative to link 1
  double w1 = 0.0, w2 = 0.0;
  Eigen::Vector2d target = Eigen::Vector2d::Zero();
};

struct ReacherStepResult {
  ReacherState state;
  double reward = 0.0;
  bool unstable = false;
};

constexpr double kReacherSpeedLimit = 50.0;  // rad/s; beyond this the episode truncates

inline double reacher_inplane_gravity(const EnvParams& p) {
  return p.g * p.gravity_scale * std::sin(p.plane_tilt);
}

inline Eigen::Vector2d reacher_tip(const ReacherState& s, const EnvParams& p) {
  const double c1 = std::cos(s.th1), s1 = std::sin(s.th1);
  const double c12 = std::cos(s.th1 + s.th2), s12 = std::sin(s.th1 + s.th2);
  return {p.l1 * c1 + p.l2 * c12, p.l1 * s1 + p.l2 * s12};
}

// Joint accelerations from the manipulator equation M(q) qdd + C(q,qd) qd + G(q) = tau.
inline Eigen::Vector2d reacher_accel(const ReacherState& s, const Eigen::Vector2d& tau,
                                     const EnvParams& p) {
  const double c2 = std::cos(s.th2), s2 = std::sin(s.th2);
  const double c1 = std::cos(s.th1);
  const double c12 = std::cos(s.th1 + s.th2);
  const double ge = reacher_inplane_gravity(p);

  const double m11 = (p.m1 + p.m2) * p.l1 * p.l1 + p.m2 * p.l2 * p.l2 +
                     2.0 * p.m2 * p.l1 * p.l2 * c2;
  const double m12 = p.m2 * p.l2 * p.l2 + p.m2 * p.l1 * p.l2 * c2;
  const double m22 = p.m2 * p.l2 * p.l2;

  const double h = p.m2 * p.l1 * p.l2 * s2;
  const double cor1 = -h * s.w2 * (2.0 * s.w1 + s.w2);
  const double cor2 = h * s.w1 * s.w1;

  const double g1 = (p.m1 + p.m2) * ge * p.l1 * c1 + p.m2 * ge * p.l2 * c12;
  const double g2 = p.m2 * ge * p.l2 * c12;

  const double r1 = tau[0] - cor1 - g1;
  const double r2 = tau[1] - cor2 - g2;
  const double det = m11 * m22 - m12 * m12;
  return {(m22 * r1 - m12 * r2) / det, (m11 * r2 - m12 * r1) / det};
}

// One control step: `substeps` semi-implicit Euler substeps (velocity first,
// then position). Reward is the negative tip-to-target distance after the step.
inline ReacherStepResult reacher_step(ReacherState s, const Action& action,
                                      const EnvParams& p) {
  const Action a = clip_action(action);
  const Eigen::Vector2d tau(p.torque_scale * p.torque_max * a[0],
                            p.torque_scale * p.torque_max * a[1]);
  for (int k = 0; k < p.substeps; ++k) {
    const Eigen::Vector2d qdd = reacher_accel(s, tau, p);
    s.w1 += p.dt * qdd[0];
    s.w2 += p.dt * qdd[1];
    s.th1 += p.dt * s.w1;
    s.th2 += p.dt * s.w2;
  }
  ReacherStepResult out;
  out.state = s;
  out.reward = -(reacher_tip(s, p) - s.target).norm();
  out.unstable = std::abs(s.w1) > kReacherSpeedLimit || std::abs(s.w2) > kReacherSpeedLimit ||
                 !std::isfinite(s.th1) || !std::isfinite(s.th2) || !std::isfinite(s.w1) ||
                 !std::isfinite(s.w2);
  return out;
}

// Observation: [cos th1, sin th1, cos th2, sin th2, w1, w2,
//               target_x, target_y, tip_x - target_x, tip_y - target_y].
inline Observation reacher_observe(const ReacherState& s, const EnvParams& p) {
  Observation o(10);
  const Eigen::Vector2d tip = reacher_tip(s, p);
  o[0] = std::cos(s.th1);
  o[1] = std::sin(s.th1);
  o[2] = std::cos(s.th2);
  o[3] = std::sin(s.th2);
  o[4] = s.w1;
  o[5] = s.w2;
  o[6] = s.target[0];
  o[7] = s.target[1];
  o[8] = tip[0] - s.target[0];
  o[9] = tip[1] - s.target[1];
  return o;
}

// Inverse of reacher_observe. The angle encoding makes this exact.
inline ReacherState reacher_state_from_obs(const Observation& o, const EnvParams&) {
  if (o.size() != 10) throw std::invalid_argument("reacher observation must have 10 dims");
  ReacherState s;
  s.th1 = std::atan2(o[1], o[0]);
  s.th2 = std::atan2(o[3], o[2]);
  s.w1 = o[4];
  s.w2 = o[5];
  s.target = {o[6], o[7]};
  return s;
}

// theta = 0, omega = 0, target uniform over the annulus 0.05 <= r <= 0.2
// (area-uniform; radius draw first, then angle).
inline ReacherState reacher_reset(const EnvParams&, RngStream& rng) {
  ReacherState s;
  const double r2 = rng.uniform(0.05 * 0.05, 0.2 * 0.2);
  const double r = std::sqrt(r2);
  const double ang = rng.uniform(0.0, 2.0 * M_PI);
  s.target = {r * std::cos(ang), r * std::sin(ang)};
  return s;
}

}  // namespace s2r
