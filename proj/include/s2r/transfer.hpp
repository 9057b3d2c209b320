#pragma once

#include <memory>

#include "invdyn.hpp"
#include "sim.hpp"

namespace s2r {

// The transfer composition: ask the source policy for an action, simulate one
// noise-free source step from the current (target) observation to see what
// that action is meant to achieve, then ask the inverse model which action
// achieves it in the target.
class TransferPolicy {
 public:
  TransferPolicy(EnvParams source, Policy pi_source, InverseModel phi)
      : source_(std::move(source)), pi_source_(std::move(pi_source)), phi_(std::move(phi)) {
    source_.check();
    if (phi_.mlp.out_dim() != source_.act_dim())
      throw std::invalid_argument("transfer: inverse model output dim does not match env");
    if (phi_.mlp.in_dim() != inv_input_dim(phi_.W, source_.obs_dim(), source_.act_dim()))
      throw std::invalid_argument("transfer: inverse model input dim does not match env/W");
  }

  const InverseModel& model() const { return phi_; }
  const EnvParams& source_params() const { return source_; }

  struct Out {
    Action a_target;
    Action a_source;
    Observation o_next_hat;
  };

  // traj is the target-env episode so far; its step count pins the phase for
  // time-indexed references.
  Out step(const Trajectory& traj) {
    if (traj.obs.empty()) throw std::invalid_argument("transfer: empty trajectory");
    Out out;
    out.a_source = clip_action(pi_source_(traj));
    const double t_hint = traj.steps() * source_.control_dt();
    out.o_next_hat = step_from_obs(source_, traj.obs.back(), out.a_source, t_hint);
    const Window w = pad_window(traj, phi_.W, source_.act_dim());
    out.a_target = (phi_.mode == InvMode::correction)
                       ? query(phi_, w, out.o_next_hat, out.a_source)
                       : query(phi_, w, out.o_next_hat);
    return out;
  }

  Policy as_policy() {
    auto self = std::make_shared<TransferPolicy>(*this);
    return [self](const Trajectory& traj) { return self->step(traj).a_target; };
  }

 private:
  EnvParams source_;
  Policy pi_source_;
  InverseModel phi_;
};

// Fresh policy instances for evaluation rollouts: each carries its own source
// policy state (MPC warm starts) and a copy of the model.
inline PolicyFactory make_transfer_factory(const EnvParams& source,
                                           const PolicyFactory& source_factory,
                                           const InverseModel& phi) {
  return [source, source_factory, phi]() -> Policy {
    return TransferPolicy(source, source_factory(), phi).as_policy();
  };
}

}  // namespace s2r
