#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <s2r/config.hpp>
#include <s2r/sweep.hpp>

namespace fs = std::filesystem;
using namespace s2r;

namespace {

const char* kUsage = R"(usage: s2r <command> [--config file.json] [--key value ...]

commands:
  expert    evaluate the source-env expert and cache score references
  collect   run the interleaved collect/train loop, writing curve + model
  train     train an inverse model from a cached sample file (--dataset_path)
  eval      evaluate a method on the target env (--method, --model_path for ours-*)
  baseline  shorthand for eval restricted to the oec/gda baselines
  sweep     run the full grid of methods x perturbations x seeds

Any config field can be overridden as --dotted.path value (e.g.
--target.gravity_scale 1.2). --env reacher2|bouncer1d switches both envs'
defaults. The effective config is echoed to <out_dir>/config.resolved.json.
)";

struct CliArgs {
  std::string command;
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
};

CliArgs parse_args(int argc, char** argv) {
  CliArgs args;
  if (argc < 2) throw ConfigError("missing command\n" + std::string(kUsage));
  args.command = argv[1];
  if (args.command == "--help" || args.command == "-h" || args.command == "help") {
    std::cout << kUsage;
    std::exit(0);
  }
  for (int i = 2; i < argc; ++i) {
    std::string key = argv[i];
    if (key.rfind("--", 0) != 0)
      throw ConfigError("expected --key, got: " + key);
    key = key.substr(2);
    if (key == "help") {
      std::cout << kUsage;
      std::exit(0);
    }
    if (i + 1 >= argc) throw ConfigError("flag --" + key + " is missing a value");
    std::string value = argv[++i];
    if (key == "config")
      args.config_path = value;
    else
      args.overrides.emplace_back(key, value);
  }
  return args;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

ScoreRefs get_refs(const RunConfig& rc) {
  if (!rc.references.empty()) {
    if (!fs::exists(rc.references))
      throw ConfigError("references path does not exist: " + rc.references);
    return load_refs(rc.references);
  }
  PolicyFactory expert = make_expert_factory(rc.source, rc.ilqr, rc.gains);
  ScoreRefs refs =
      compute_refs(rc.source, expert, rc.eval.ref_episodes, RngStream(rc.seed).substream(77));
  save_refs(rc.out_dir + "/references.json", refs);
  return refs;
}

int cmd_expert(const RunConfig& rc) {
  PolicyFactory expert = make_expert_factory(rc.source, rc.ilqr, rc.gains);
  const ScoreRefs refs =
      compute_refs(rc.source, expert, rc.eval.ref_episodes, RngStream(rc.seed).substream(77));
  save_refs(rc.out_dir + "/references.json", refs);

  Policy demo = expert();
  RngStream demo_rng = RngStream(rc.seed).substream(5);
  const Trajectory traj = rollout(rc.source, demo, demo_rng);
  save_trajectories(rc.out_dir + "/expert_trajectory.jsonl", {traj});

  std::cout << "expert_return " << fmt_g(refs.expert_return) << "\n"
            << "zero_return " << fmt_g(refs.zero_return) << "\n"
            << "references " << rc.out_dir + "/references.json" << "\n";
  return 0;
}

int cmd_collect(const RunConfig& rc) {
  if (rc.method.rfind("ours", 0) != 0)
    throw ConfigError("collect needs an ours-* method, got: " + rc.method);
  const ScoreRefs refs = get_refs(rc);

  InvMode mode;
  int W;
  detail::ours_mode_window(rc.method, rc, mode, W);
  TrainLoopConfig tlc = detail::train_loop_config(rc, mode, W);

  PolicyFactory source_factory = make_expert_factory(rc.source, rc.ilqr, rc.gains);

  std::ofstream curve_out = open_out(rc.out_dir + "/curve.jsonl");
  const std::string model_path = rc.out_dir + "/model.json";
  const std::string out_dir = rc.out_dir;
  const bool want_samples = rc.save_samples;
  const InvMode sample_mode = mode;

  auto sink = [&](const IterationRecord& rec, const std::vector<LabeledStep>& fresh) {
    json j{{"iteration", rec.iteration},
           {"samples", rec.cumulative_samples},
           {"score", rec.score},
           {"episodes", rec.stats.episodes},
           {"resets", rec.stats.resets},
           {"mean_episode_len", rec.stats.mean_episode_len},
           {"mean_onestep_gap", rec.stats.mean_onestep_gap},
           {"label_boundary_frac", rec.stats.label_boundary_frac},
           {"degenerate_labels", rec.stats.degenerate_labels},
           {"train_mse", rec.train_report.final_train_mse},
           {"val_mse", rec.train_report.best_val_mse},
           {"epochs_run", rec.train_report.epochs_run}};
    curve_out << j.dump() << "\n";
    curve_out.flush();
    if (rec.stats.degenerate_labels)
      std::cerr << "warning: iteration " << rec.iteration
                << " labels look degenerate (fraction at clip boundary "
                << fmt_g(rec.stats.label_boundary_frac) << ")\n";
    if (want_samples) {
      char name[64];
      std::snprintf(name, sizeof name, "/samples_iter_%03d.jsonl", rec.iteration);
      save_samples(out_dir + name, to_samples(fresh, sample_mode));
    }
    std::cout << "iter " << rec.iteration << " samples " << rec.cumulative_samples
              << " score " << fmt_g(rec.score) << " ep_len "
              << fmt_g(rec.stats.mean_episode_len) << " gap "
              << fmt_g(rec.stats.mean_onestep_gap) << "\n";
  };

  const TrainLoopResult res = train_loop(rc.source, rc.target, source_factory, tlc, refs,
                                         RngStream(rc.seed), sink);
  save_inverse_model(model_path, res.model);
  save_curve(rc.out_dir + "/score_curve.jsonl", res.curve);

  const auto sc = sample_complexity(res.curve, rc.eval.threshold);
  std::cout << "final_score " << (res.curve.empty() ? "nan" : fmt_g(res.curve.back().score))
            << "\n"
            << "samples_to_threshold " << (sc ? std::to_string(*sc) : std::string("nr"))
            << "\n"
            << "model " << model_path << "\n";
  return 0;
}

int cmd_train(const RunConfig& rc) {
  if (rc.dataset_path.empty())
    throw ConfigError("train needs --dataset_path pointing at a sample cache");
  if (!fs::exists(rc.dataset_path))
    throw ConfigError("dataset path does not exist: " + rc.dataset_path);
  const std::vector<InvSample> samples = load_samples(rc.dataset_path);
  if (samples.empty()) throw ConfigError("dataset is empty: " + rc.dataset_path);

  const InvMode mode = rc.resolved_mode();
  const int expect =
      inv_input_dim(rc.W, rc.source.obs_dim(), rc.source.act_dim());
  if (static_cast<int>(samples.front().input.size()) != expect)
    throw ConfigError("dataset input dim " +
                      std::to_string(samples.front().input.size()) +
                      " does not match W=" + std::to_string(rc.W) + " (expected " +
                      std::to_string(expect) + ")");

  TrainReport report;
  const InverseModel model =
      train(samples, rc.W, mode, rc.train, RngStream(rc.seed).substream(2), &report);
  save_inverse_model(rc.out_dir + "/model.json", model);

  json j{{"samples", samples.size()},
         {"train_mse", report.final_train_mse},
         {"val_mse", report.best_val_mse},
         {"label_variance", report.label_variance},
         {"epochs_run", report.epochs_run}};
  open_out(rc.out_dir + "/train_report.json") << j.dump(2) << "\n";
  std::cout << "train_mse " << fmt_g(report.final_train_mse) << "\n"
            << "val_mse " << fmt_g(report.best_val_mse) << "\n"
            << "model " << rc.out_dir + "/model.json" << "\n";
  return 0;
}

PolicyFactory method_factory(const RunConfig& rc, const std::string& method) {
  if (method == "expert") return make_expert_factory(rc.source, rc.ilqr, rc.gains);
  if (method == "zero") return make_zero_factory(rc.source.act_dim());
  if (method == "oec") return make_oec_factory(rc.source, rc.oec.gamma, rc.ilqr);
  if (method == "gda")
    return make_gda_factory(rc.source, rc.gda, rc.ilqr, RngStream(rc.seed).substream(777));
  // ours-*: replay a trained checkpoint through the transfer composition
  if (rc.model_path.empty())
    throw ConfigError("method " + method + " needs --model_path (a trained checkpoint)");
  if (!fs::exists(rc.model_path))
    throw ConfigError("model path does not exist: " + rc.model_path);
  const InverseModel model = load_inverse_model(rc.model_path);
  return make_transfer_factory(rc.source, make_expert_factory(rc.source, rc.ilqr, rc.gains),
                               model);
}

int cmd_eval(const RunConfig& rc, bool baselines_only) {
  if (baselines_only && rc.method != "oec" && rc.method != "gda")
    throw ConfigError("baseline needs method oec or gda, got: " + rc.method);
  const ScoreRefs refs = get_refs(rc);
  const PolicyFactory factory = method_factory(rc, rc.method);

  std::vector<double> scores(rc.eval.seeds);
  for (int s = 0; s < rc.eval.seeds; ++s)
    scores[s] = score_policy(rc.target, factory, rc.eval.episodes, refs,
                             RngStream(rc.seed).substream(42000 + s));

  std::ofstream csv = open_out(rc.out_dir + "/scores.csv");
  csv << sweep_csv_header() << "\n";
  for (int s = 0; s < rc.eval.seeds; ++s) {
    SweepRow row;
    row.env = env_kind_name(rc.source.kind);
    row.method = rc.method;
    row.axis = "manual";
    row.value = "-";
    row.seed = s;
    row.score = scores[s];
    csv << to_csv(row) << "\n";
  }

  json j{{"method", rc.method},
         {"median", median(scores)},
         {"q1", quantile(scores, 0.25)},
         {"q3", quantile(scores, 0.75)},
         {"scores", scores}};
  open_out(rc.out_dir + "/eval.json") << j.dump(2) << "\n";
  std::cout << "method " << rc.method << "\n"
            << "median_score " << fmt_g(median(scores)) << "\n";
  return 0;
}

int cmd_sweep(const RunConfig& rc) {
  const ScoreRefs refs = get_refs(rc);
  std::ofstream csv = open_out(rc.out_dir + "/results.csv");
  const SweepResult res = run_sweep(rc, refs, csv, &std::cerr);
  open_out(rc.out_dir + "/summary.json") << res.summary.dump(2) << "\n";
  std::cout << "rows " << res.rows.size() << "\n"
            << "results " << rc.out_dir + "/results.csv" << "\n"
            << "summary " << rc.out_dir + "/summary.json" << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    const CliArgs args = parse_args(argc, argv);
    const RunConfig rc = parse_config(args.config_path, args.overrides);
    write_resolved_config(rc);

    if (args.command == "expert") return cmd_expert(rc);
    if (args.command == "collect") return cmd_collect(rc);
    if (args.command == "train") return cmd_train(rc);
    if (args.command == "eval") return cmd_eval(rc, false);
    if (args.command == "baseline") return cmd_eval(rc, true);
    if (args.command == "sweep") return cmd_sweep(rc);
    throw ConfigError("unknown command: " + args.command + "\n" + std::string(kUsage));
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
}
