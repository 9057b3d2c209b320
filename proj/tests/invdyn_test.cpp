#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "s2r/invdyn.hpp"

using namespace s2r;

namespace {

// Scalar chain o_{t+1} = o_t + a_t: trajectories whose inverse dynamics are
// exactly recoverable, the workhorse for the learning checks below.
Trajectory integrator_traj(int steps, RngStream& rng) {
  Trajectory t;
  t.obs.push_back(Vec::Constant(1, rng.uniform(-1.0, 1.0)));
  for (int i = 0; i < steps; ++i) {
    const double a = rng.uniform(-1.0, 1.0);
    t.act.push_back(Vec::Constant(1, a));
    t.obs.push_back(Vec::Constant(1, t.obs.back()[0] + a));
    t.rew.push_back(0.0);
  }
  return t;
}

Window window_of(const std::vector<Vec>& obs, const std::vector<Vec>& act) {
  Window w;
  w.obs = obs;
  w.act = act;
  return w;
}

}  // namespace

TEST(InvDyn, InputDimAndLayout) {
  EXPECT_EQ(inv_input_dim(2, 10, 2), 4 * 10 + 2 * 2);
  EXPECT_EQ(inv_input_dim(0, 4, 1), 2 * 4);
  EXPECT_EQ(inv_input_dim(3, 4, 1), 5 * 4 + 3);

  // Layout: obs oldest-to-newest, then actions, then the achieved next obs.
  Window w = window_of({Vec::Constant(3, 1.0), Vec::Constant(3, 2.0), Vec::Constant(3, 3.0)},
                       {Vec::Constant(2, 4.0), Vec::Constant(2, 5.0)});
  Vec x = assemble_input(w, Vec::Constant(3, 6.0));
  ASSERT_EQ(x.size(), inv_input_dim(2, 3, 2));
  EXPECT_EQ(x.segment(0, 3), Vec::Constant(3, 1.0));
  EXPECT_EQ(x.segment(3, 3), Vec::Constant(3, 2.0));
  EXPECT_EQ(x.segment(6, 3), Vec::Constant(3, 3.0));
  EXPECT_EQ(x.segment(9, 2), Vec::Constant(2, 4.0));
  EXPECT_EQ(x.segment(11, 2), Vec::Constant(2, 5.0));
  EXPECT_EQ(x.segment(13, 3), Vec::Constant(3, 6.0));

  // W = 0 windows carry only the current observation.
  Window w0 = window_of({Vec::Constant(2, 7.0)}, {});
  Vec x0 = assemble_input(w0, Vec::Constant(2, 8.0));
  ASSERT_EQ(x0.size(), 4);
  EXPECT_EQ(x0.segment(0, 2), Vec::Constant(2, 7.0));
  EXPECT_EQ(x0.segment(2, 2), Vec::Constant(2, 8.0));
}

TEST(InvDyn, SampleLabelsByMode) {
  LabeledStep s;
  s.window = window_of({Vec::Constant(2, 0.1)}, {});
  s.o_next = Vec::Constant(2, 0.2);
  s.a_exec = Vec::Constant(1, 0.7);
  s.a_source = Vec::Constant(1, 0.5);
  EXPECT_EQ(to_sample(s, InvMode::direct).label, Vec::Constant(1, 0.7));
  EXPECT_NEAR(to_sample(s, InvMode::correction).label[0], 0.2, 1e-15);

  auto both = to_samples({s, s}, InvMode::direct);
  ASSERT_EQ(both.size(), 2u);
  EXPECT_EQ(both[0].input, both[1].input);
}

TEST(InvDyn, BuildDatasetPadsEpisodeStarts) {
  RngStream rng(3);
  Trajectory t = integrator_traj(4, rng);
  const int W = 2;
  auto ds = build_dataset({t, t}, W);
  ASSERT_EQ(ds.size(), 8u);  // one sample per action, both episodes

  // First sample: the one-obs prefix is left-padded with repeats of obs[0]
  // and zero actions of the episode's action dimension, so every sample in
  // the dataset has the same input width.
  Window w0;
  w0.obs = {t.obs[0], t.obs[0], t.obs[0]};
  w0.act = {Vec::Zero(1), Vec::Zero(1)};
  EXPECT_EQ(ds[0].input, assemble_input(w0, t.obs[1]));
  EXPECT_EQ(ds[0].label, t.act[0]);
  for (const auto& s : ds) ASSERT_EQ(s.input.size(), ds[0].input.size());

  // A later sample uses the true unpadded history.
  Window w2;
  w2.obs = {t.obs[0], t.obs[1], t.obs[2]};
  w2.act = {t.act[0], t.act[1]};
  EXPECT_EQ(ds[2].input, assemble_input(w2, t.obs[3]));
  EXPECT_EQ(ds[2].label, t.act[2]);

  // The second episode's first sample is padded again, not contaminated by
  // the first episode's tail.
  EXPECT_EQ(ds[4].input, ds[0].input);
}

TEST(InvDyn, ZeroModelIdentities) {
  InverseModel direct = zero_inverse_model(1, 2, 1, InvMode::direct, {8});
  Window w = window_of({Vec::Constant(2, 0.3), Vec::Constant(2, 0.4)}, {Vec::Constant(1, 0.2)});
  const Observation o_next = Vec::Constant(2, 0.5);
  EXPECT_EQ(query(direct, w, o_next), Vec::Zero(1));

  InverseModel corr = zero_inverse_model(1, 2, 1, InvMode::correction, {8});
  for (double a : {0.37, -1.0, 1.0, 0.0, -0.25}) {
    const Action a_src = Vec::Constant(1, a);
    const Action out = query(corr, w, o_next, a_src);
    EXPECT_EQ(out[0], a);  // bitwise: the bootstrap must not perturb the source
  }

  // Dim and mode misuse.
  EXPECT_THROW(query(direct, window_of({o_next}, {}), o_next), std::invalid_argument);
  EXPECT_THROW(query(corr, w, o_next), std::invalid_argument);  // missing a_source
  EXPECT_THROW(query(direct, w, Vec::Zero(5)), std::invalid_argument);
}

TEST(InvDyn, LearnsScalarIntegratorInverse) {
  RngStream rng(11);
  std::vector<Trajectory> trajs;
  for (int e = 0; e < 40; ++e) trajs.push_back(integrator_traj(50, rng));
  auto ds = build_dataset(trajs, 0);
  ASSERT_EQ(ds.size(), 2000u);

  TrainConfig cfg;
  cfg.hidden = {64, 64};
  cfg.epochs = 60;
  TrainReport rep;
  InverseModel m = train(ds, 0, InvMode::direct, cfg, RngStream(5), &rep);
  EXPECT_GT(rep.epochs_run, 0);
  EXPECT_GT(rep.label_variance, 0.2);  // labels are U(-1,1): var = 1/3

  double mae = 0.0;
  int n_eval = 0;
  RngStream eval_rng(12);
  for (int e = 0; e < 5; ++e) {
    Trajectory t = integrator_traj(50, eval_rng);
    for (int k = 0; k < t.steps(); ++k) {
      const Action got = query(m, window_of({t.obs[k]}, {}), t.obs[k + 1]);
      mae += std::abs(got[0] - t.act[k][0]);
      ++n_eval;
    }
  }
  mae /= n_eval;
  EXPECT_LE(mae, 0.02) << "held-out inverse-action error too large";
}

TEST(InvDyn, TrainIsDeterministicGivenStream) {
  RngStream rng(13);
  auto ds = build_dataset({integrator_traj(60, rng)}, 1);
  TrainConfig cfg;
  cfg.hidden = {16};
  cfg.epochs = 8;
  InverseModel a = train(ds, 1, InvMode::direct, cfg, RngStream(9));
  InverseModel b = train(ds, 1, InvMode::direct, cfg, RngStream(9));
  ASSERT_EQ(a.mlp.sizes, b.mlp.sizes);
  for (int i = 0; i < a.mlp.layers(); ++i) {
    EXPECT_EQ(a.mlp.W[i], b.mlp.W[i]);
    EXPECT_EQ(a.mlp.b[i], b.mlp.b[i]);
  }
  InverseModel c = train(ds, 1, InvMode::direct, cfg, RngStream(10));
  bool differs = false;
  for (int i = 0; i < a.mlp.layers() && !differs; ++i) differs = a.mlp.W[i] != c.mlp.W[i];
  EXPECT_TRUE(differs);
}

TEST(InvDyn, EarlyStoppingAndValidationSplit) {
  // Pure-noise labels: validation quickly stops improving, so early stopping
  // must cut the run well short of the epoch budget.
  RngStream rng(15);
  std::vector<InvSample> noise;
  for (int i = 0; i < 300; ++i)
    noise.push_back(InvSample{rng.normal_vector(3), rng.normal_vector(1)});
  TrainConfig cfg;
  cfg.hidden = {32};
  cfg.epochs = 400;
  cfg.patience = 5;
  TrainReport rep;
  train(noise, 0, InvMode::direct, cfg, RngStream(4), &rep);
  EXPECT_LT(rep.epochs_run, 400);
  EXPECT_GT(rep.best_val_mse, 0.0);

  // Same data without early stopping runs the full budget.
  cfg.early_stop = false;
  cfg.epochs = 12;
  TrainReport rep2;
  train(noise, 0, InvMode::direct, cfg, RngStream(4), &rep2);
  EXPECT_EQ(rep2.epochs_run, 12);

  // Tiny datasets skip the split entirely.
  std::vector<InvSample> tiny(noise.begin(), noise.begin() + 6);
  cfg.early_stop = true;
  cfg.epochs = 7;
  TrainReport rep3;
  train(tiny, 0, InvMode::direct, cfg, RngStream(4), &rep3);
  EXPECT_EQ(rep3.epochs_run, 7);
  EXPECT_EQ(rep3.best_val_mse, rep3.final_train_mse);
}

TEST(InvDyn, TrainRejectsBadDatasets) {
  TrainConfig cfg;
  EXPECT_THROW(train({}, 0, InvMode::direct, cfg, RngStream(1)), std::invalid_argument);
  std::vector<InvSample> bad = {InvSample{Vec::Zero(4), Vec::Zero(1)},
                                InvSample{Vec::Zero(3), Vec::Zero(1)}};
  EXPECT_THROW(train(bad, 0, InvMode::direct, cfg, RngStream(1)), std::invalid_argument);
}

TEST(InvDyn, CheckpointRoundTripIsBitwise) {
  RngStream rng(21);
  auto ds = build_dataset({integrator_traj(30, rng)}, 1);
  TrainConfig cfg;
  cfg.hidden = {12};
  cfg.epochs = 4;
  InverseModel m = train(ds, 1, InvMode::correction, cfg, RngStream(2));

  const std::string path = std::filesystem::temp_directory_path() / "s2r_inv_model.json";
  save_inverse_model(path, m);
  InverseModel r = load_inverse_model(path);
  std::remove(path.c_str());

  EXPECT_EQ(r.W, m.W);
  EXPECT_EQ(r.mode, m.mode);
  EXPECT_EQ(r.norm.mu, m.norm.mu);
  EXPECT_EQ(r.norm.sigma, m.norm.sigma);
  ASSERT_EQ(r.mlp.sizes, m.mlp.sizes);
  for (int i = 0; i < m.mlp.layers(); ++i) {
    EXPECT_EQ(r.mlp.W[i], m.mlp.W[i]);
    EXPECT_EQ(r.mlp.b[i], m.mlp.b[i]);
  }

  json j = inverse_model_to_json(m);
  j["mu"] = vec_to_json(Vec::Zero(2));
  EXPECT_THROW(inverse_model_from_json(j), std::invalid_argument);
  EXPECT_THROW(inv_mode_from_name("sideways"), std::invalid_argument);
  EXPECT_EQ(inv_mode_name(InvMode::direct), "direct");
  EXPECT_EQ(inv_mode_name(InvMode::correction), "correction");
}

TEST(InvDyn, SampleJsonlRoundTrip) {
  RngStream rng(22);
  std::vector<InvSample> samples;
  for (int i = 0; i < 7; ++i)
    samples.push_back(InvSample{rng.normal_vector(5), rng.normal_vector(2)});

  const InvSample one = inv_sample_from_jsonl(inv_sample_to_jsonl(samples[0]));
  EXPECT_EQ(one.input, samples[0].input);
  EXPECT_EQ(one.label, samples[0].label);

  const std::string path = std::filesystem::temp_directory_path() / "s2r_inv_samples.jsonl";
  save_samples(path, samples);
  auto loaded = load_samples(path);
  std::remove(path.c_str());
  ASSERT_EQ(loaded.size(), samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    EXPECT_EQ(loaded[i].input, samples[i].input);
    EXPECT_EQ(loaded[i].label, samples[i].label);
  }
}
