#pragma once

#include <functional>
#include <vector>

#include "eval.hpp"
#include "transfer.hpp"

namespace s2r {

struct CollectConfig {
  double p_inject = 0.1;
  double inject_std = 0.3;
  double deviation_delta = 2.0;   // z-units, max over dims
  int deviation_patience = 5;     // consecutive steps beyond delta before reset
  int samples_per_iteration = 5000;
  int iterations = 30;

  void check() const {
    if (!(p_inject >= 0.0 && p_inject <= 1.0))
      throw std::invalid_argument("collect.p_inject must be in [0, 1]");
    if (!(inject_std >= 0.0)) throw std::invalid_argument("collect.inject_std must be >= 0");
    if (!(deviation_delta > 0.0)) throw std::invalid_argument("collect.deviation_delta must be > 0");
    if (deviation_patience < 1)
      throw std::invalid_argument("collect.deviation_patience must be >= 1");
    if (samples_per_iteration < 1)
      throw std::invalid_argument("collect.samples_per_iteration must be >= 1");
    if (iterations < 0) throw std::invalid_argument("collect.iterations must be >= 0");
  }
};

struct CollectStats {
  long steps = 0;
  long episodes = 0;
  long resets = 0;            // deviation-triggered early resets
  double mean_episode_len = 0.0;
  double mean_onestep_gap = 0.0;  // max-dim z-scored |o_next - o_next_hat|
  double label_boundary_frac = 0.0;
  bool degenerate_labels = false;
};

// Per-dim observation spread from a few noise-free source-expert rollouts;
// the z-scale for deviation and fidelity metrics.
inline Vec compute_obs_scale(const EnvParams& source, const PolicyFactory& expert_factory,
                             int episodes, const RngStream& rng) {
  EnvParams p = source;
  p.noise = NoiseParams{};
  std::vector<Observation> all;
  for (int e = 0; e < episodes; ++e) {
    RngStream ep_rng = rng.substream(static_cast<std::uint64_t>(e));
    Policy pol = expert_factory();
    Trajectory traj = rollout(p, pol, ep_rng);
    for (auto& o : traj.obs) all.push_back(std::move(o));
  }
  Mat X(source.obs_dim(), static_cast<int>(all.size()));
  for (int i = 0; i < static_cast<int>(all.size()); ++i) X.col(i) = all[i];
  const Vec mu = X.rowwise().mean();
  Vec sd = ((X.colwise() - mu).array().square().rowwise().mean()).sqrt().matrix();
  return sd.cwiseMax(1e-3);
}

// Runs target-env episodes under the current transfer policy with occasional
// Gaussian action injection. A parallel noise-free source rollout from the
// same initial state serves as the deviation reference; the episode resets
// after `patience` consecutive steps whose max-dim z-scored offset exceeds
// delta. Every executed step becomes one labeled sample.
inline std::vector<LabeledStep> collect_iteration(
    const EnvParams& target, TransferPolicy& tp, const PolicyFactory& source_factory,
    const CollectConfig& cfg, const Vec& obs_scale, const RngStream& rng,
    CollectStats* stats_out = nullptr) {
  cfg.check();
  target.check();
  EnvParams ref_params = tp.source_params();
  ref_params.noise = NoiseParams{};

  const int W = tp.model().W;
  const int d_act = target.act_dim();

  std::vector<LabeledStep> out;
  out.reserve(cfg.samples_per_iteration);
  CollectStats stats;
  double gap_sum = 0.0;
  long boundary_entries = 0, label_entries = 0;

  for (std::uint64_t ep = 0; static_cast<int>(out.size()) < cfg.samples_per_iteration; ++ep) {
    // The reference env replays the same init draws to start from the same state.
    RngStream ep_rng = rng.substream(ep);
    RngStream ref_rng = rng.substream(ep);
    RngStream inj_rng = rng.substream(100000 + ep);

    Env tgt(target);
    Env ref(ref_params);
    Trajectory traj, ref_traj;
    traj.obs.push_back(tgt.reset(ep_rng));
    ref_traj.obs.push_back(ref.reset(ref_rng));
    Policy ref_policy = source_factory();

    ++stats.episodes;
    int beyond = 0;
    for (int t = 0; t < target.episode_len; ++t) {
      const auto plan = tp.step(traj);
      Action a_exec = plan.a_target;
      const bool injected = inj_rng.uniform() < cfg.p_inject;
      if (injected)
        a_exec = clip_action(a_exec + cfg.inject_std * inj_rng.normal_vector(d_act));

      LabeledStep step;
      step.window = pad_window(traj, W, d_act);
      step.a_exec = a_exec;
      step.a_source = plan.a_source;

      const auto tout = tgt.step(a_exec, ep_rng);
      step.o_next = tout.obs;

      gap_sum +=
          ((tout.obs - plan.o_next_hat).cwiseQuotient(obs_scale)).cwiseAbs().maxCoeff();
      for (int i = 0; i < d_act; ++i) {
        ++label_entries;
        if (std::abs(a_exec[i]) >= 0.999) ++boundary_entries;
      }

      traj.act.push_back(a_exec);
      traj.obs.push_back(tout.obs);
      traj.rew.push_back(tout.reward);
      out.push_back(std::move(step));
      ++stats.steps;

      const Action a_ref = clip_action(ref_policy(ref_traj));
      const auto rout = ref.step(a_ref, ref_rng);
      ref_traj.act.push_back(a_ref);
      ref_traj.obs.push_back(rout.obs);
      ref_traj.rew.push_back(rout.reward);

      const double dev =
          ((tout.obs - rout.obs).cwiseQuotient(obs_scale)).cwiseAbs().maxCoeff();
      beyond = (dev > cfg.deviation_delta) ? beyond + 1 : 0;

      if (static_cast<int>(out.size()) >= cfg.samples_per_iteration) break;
      if (beyond >= cfg.deviation_patience) {
        ++stats.resets;
        break;
      }
      if (tout.unstable || rout.unstable) break;
    }
  }

  stats.mean_episode_len =
      static_cast<double>(stats.steps) / static_cast<double>(stats.episodes);
  stats.mean_onestep_gap = gap_sum / static_cast<double>(stats.steps);
  stats.label_boundary_frac =
      static_cast<double>(boundary_entries) / static_cast<double>(label_entries);
  stats.degenerate_labels = stats.label_boundary_frac > 0.5;
  if (stats_out) *stats_out = stats;
  return out;
}

struct TrainLoopConfig {
  int W = 2;
  InvMode mode = InvMode::correction;
  CollectConfig collect;
  TrainConfig train;
  int eval_episodes = 10;
  double threshold = 0.75;
  // Optional early exit once the score has held the threshold for
  // `crossing_confirm` consecutive iterations (cuts cumulative-retraining cost).
  bool stop_after_crossing = false;
  int crossing_confirm = 3;
};

struct IterationRecord {
  int iteration = 0;
  long cumulative_samples = 0;
  double score = 0.0;
  CollectStats stats;
  TrainReport train_report;
};

struct TrainLoopResult {
  InverseModel model;
  ScoreCurve curve;
  std::vector<IterationRecord> records;
};

// The interleaved procedure: collect with the current model, retrain from
// scratch on all data so far, evaluate. Iteration 1 collects with a
// zero-correction model, i.e. the raw source expert plus injection noise.
inline TrainLoopResult train_loop(
    const EnvParams& source, const EnvParams& target, const PolicyFactory& source_factory,
    const TrainLoopConfig& cfg, const ScoreRefs& refs, const RngStream& rng,
    const std::function<void(const IterationRecord&, const std::vector<LabeledStep>&)>&
        on_iteration = nullptr) {
  source.check();
  target.check();
  const int d_obs = source.obs_dim(), d_act = source.act_dim();
  if (target.obs_dim() != d_obs || target.act_dim() != d_act)
    throw std::invalid_argument("train_loop: source/target dims differ");

  const Vec obs_scale = compute_obs_scale(source, source_factory, 3, rng.substream(1));

  TrainLoopResult res;
  res.model =
      zero_inverse_model(cfg.W, d_obs, d_act, InvMode::correction, cfg.train.hidden);

  std::vector<InvSample> samples;
  long total_samples = 0;
  int held = 0;
  for (int iter = 1; iter <= cfg.collect.iterations; ++iter) {
    TransferPolicy tp(source, source_factory(), res.model);
    CollectStats stats;
    const std::vector<LabeledStep> fresh = collect_iteration(
        target, tp, source_factory, cfg.collect, obs_scale, rng.substream(1000 + iter),
        &stats);
    for (const auto& s : fresh) samples.push_back(to_sample(s, cfg.mode));
    total_samples += static_cast<long>(fresh.size());

    TrainReport report;
    res.model = train(samples, cfg.W, cfg.mode, cfg.train, rng.substream(2000 + iter),
                      &report);

    PolicyFactory pi_target = make_transfer_factory(source, source_factory, res.model);
    const double ret = evaluate_policy_median(target, pi_target, cfg.eval_episodes,
                                              rng.substream(3000 + iter));
    const double score = normalized_score(ret, refs);

    res.curve.push_back(CurvePoint{total_samples, score});

    IterationRecord rec;
    rec.iteration = iter;
    rec.cumulative_samples = total_samples;
    rec.score = score;
    rec.stats = stats;
    rec.train_report = report;
    if (on_iteration) on_iteration(rec, fresh);
    res.records.push_back(std::move(rec));

    held = (score >= cfg.threshold) ? held + 1 : 0;
    if (cfg.stop_after_crossing && held >= cfg.crossing_confirm) break;
  }
  return res;
}

}  // namespace s2r
