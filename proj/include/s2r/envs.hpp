#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "core.hpp"
#include "rng.hpp"

namespace s2r {

enum class EnvKind { reacher2, bouncer1d };

inline std::string env_kind_name(EnvKind k) {
  return k == EnvKind::reacher2 ? "reacher2" : "bouncer1d";
}

inline EnvKind env_kind_from_name(const std::string& s) {
  if (s == "reacher2") return EnvKind::reacher2;
  if (s == "bouncer1d") return EnvKind::bouncer1d;
  throw std::invalid_argument("unknown env kind: " + s + " (expected reacher2 or bouncer1d)");
}

// AR(1) motor noise: eps_t = rho*eps_{t-1} + std*sqrt(1-rho^2)*nu_t, with
// stationary per-dim standard deviation `std`. rho = 1 degenerates to a
// constant per-episode offset.
struct NoiseParams {
  double std = 0.0;
  double rho = 0.0;
};

// Physical and task parameters for both environments. Fields not used by a
// kind are ignored by it (e.g. restitution for reacher2).
struct EnvParams {
  EnvKind kind = EnvKind::reacher2;

  double g = 9.81;
  double gravity_scale = 1.0;  // scales g for both envs
  double plane_tilt = 0.0;     // radians; reacher2 in-plane gravity = g*gravity_scale*sin(tilt)

  double m1 = 1.7, m2 = 1.7;   // reacher2 point masses (kg)
  double l1 = 0.1, l2 = 0.1;   // reacher2 link lengths (m)
  double mass = 1.0;           // bouncer1d mass (kg)
  double restitution = 0.8;    // bouncer1d floor bounce coefficient

  double torque_scale = 1.0;   // kappa: command -> torque/force multiplier
  double torque_max = 8.0;     // u_max: |torque or force| at |command| = 1

  double dt = 0.01;
  int substeps = 2;
  int episode_len = 150;

  NoiseParams noise;

  int obs_dim() const { return kind == EnvKind::reacher2 ? 10 : 4; }
  int act_dim() const { return kind == EnvKind::reacher2 ? 2 : 1; }
  double control_dt() const { return dt * substeps; }

  void check() const {
    if (!(dt > 0.0)) throw std::invalid_argument("env.dt must be > 0");
    if (substeps < 1) throw std::invalid_argument("env.substeps must be >= 1");
    if (episode_len < 1) throw std::invalid_argument("env.episode_len must be >= 1");
    if (!(m1 > 0.0 && m2 > 0.0 && mass > 0.0))
      throw std::invalid_argument("env masses must be > 0");
    if (!(l1 > 0.0 && l2 > 0.0)) throw std::invalid_argument("env link lengths must be > 0");
    if (!(torque_scale > 0.0)) throw std::invalid_argument("env.torque_scale must be > 0");
    if (!(torque_max > 0.0)) throw std::invalid_argument("env.torque_max must be > 0");
    if (!(restitution > 0.0 && restitution <= 1.0))
      throw std::invalid_argument("env.restitution must be in (0, 1]");
    if (!(noise.std >= 0.0)) throw std::invalid_argument("env.noise.std must be >= 0");
    if (!(noise.rho >= 0.0 && noise.rho <= 1.0))
      throw std::invalid_argument("env.noise.rho must be in [0, 1]");
    if (!(g > 0.0)) throw std::invalid_argument("env.g must be > 0");
  }
};

inline EnvParams reacher_params() {
  EnvParams p;
  p.kind = EnvKind::reacher2;
  p.torque_max = 8.0;
  p.episode_len = 150;
  return p;
}

inline EnvParams bouncer_params() {
  EnvParams p;
  p.kind = EnvKind::bouncer1d;
  p.torque_max = 20.0;
  p.episode_len = 200;
  return p;
}

inline void to_json(json& j, const NoiseParams& n) {
  j = json{{"std", n.std}, {"rho", n.rho}};
}

inline void from_json(const json& j, NoiseParams& n) {
  n.std = j.at("std").get<double>();
  n.rho = j.at("rho").get<double>();
}

inline void to_json(json& j, const EnvParams& p) {
  j = json{{"kind", env_kind_name(p.kind)},
           {"g", p.g},
           {"gravity_scale", p.gravity_scale},
           {"plane_tilt", p.plane_tilt},
           {"m1", p.m1},
           {"m2", p.m2},
           {"l1", p.l1},
           {"l2", p.l2},
           {"mass", p.mass},
           {"restitution", p.restitution},
           {"torque_scale", p.torque_scale},
           {"torque_max", p.torque_max},
           {"dt", p.dt},
           {"substeps", p.substeps},
           {"episode_len", p.episode_len},
           {"noise", p.noise}};
}

inline void from_json(const json& j, EnvParams& p) {
  p.kind = env_kind_from_name(j.at("kind").get<std::string>());
  p.g = j.at("g").get<double>();
  p.gravity_scale = j.at("gravity_scale").get<double>();
  p.plane_tilt = j.at("plane_tilt").get<double>();
  p.m1 = j.at("m1").get<double>();
  p.m2 = j.at("m2").get<double>();
  p.l1 = j.at("l1").get<double>();
  p.l2 = j.at("l2").get<double>();
  p.mass = j.at("mass").get<double>();
  p.restitution = j.at("restitution").get<double>();
  p.torque_scale = j.at("torque_scale").get<double>();
  p.torque_max = j.at("torque_max").get<double>();
  p.dt = j.at("dt").get<double>();
  p.substeps = j.at("substeps").get<int>();
  p.episode_len = j.at("episode_len").get<int>();
  p.noise = j.at("noise").get<NoiseParams>();
}

inline void save_env_params(const std::string& path, const EnvParams& p) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  json j = p;
  out << j.dump(2) << "\n";
}

inline EnvParams load_env_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  json j = json::parse(in);
  EnvParams p = j.get<EnvParams>();
  p.check();
  return p;
}

// Current AR(1) noise offset, one entry per action dim.
struct NoiseState {
  Vec eps;
};

// Draw from the stationary distribution N(0, std^2) so rho = 1 behaves as a
// fixed offset with the declared magnitude.
inline NoiseState init_noise_state(const NoiseParams& n, int d_act, RngStream& rng) {
  NoiseState s;
  if (n.std > 0.0)
    s.eps = n.std * rng.normal_vector(d_act);
  else
    s.eps = Vec::Zero(d_act);
  return s;
}

// Advances eps and returns the perturbed action, re-clipped to the actuator
// range. With rho = 1 the episode-start draw is kept as a constant offset.
inline Action apply_motor_noise(const Action& a, NoiseState& s, const NoiseParams& n,
                                RngStream& rng) {
  if (n.std > 0.0 && n.rho < 1.0)
    s.eps = n.rho * s.eps + n.std * std::sqrt(1.0 - n.rho * n.rho) * rng.normal_vector(
                                                     static_cast<int>(s.eps.size()));
  return clip_action(a + s.eps);
}

}  // namespace s2r
