#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tomsyn/config.hpp"
#include "tomsyn/dataset_io.hpp"
#include "tomsyn/error.hpp"
#include "tomsyn/expectations.hpp"
#include "tomsyn/experiments.hpp"
#include "tomsyn/pipeline.hpp"
#include "tomsyn/random.hpp"
#include "tomsyn/stats.hpp"

namespace fs = std::filesystem;
using namespace tomsyn;

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string out;
  std::string maps;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file");
  cmd->add_option("--seed", f.seed, "global seed (drives the whole pipeline)");
  cmd->add_option("--jobs", f.jobs, "worker threads for actor runs");
  cmd->add_option("--out", f.out,
                  "output directory (default $TOM_SYNERGY_OUT or ./out)");
  cmd->add_option("--maps", f.maps, "maps directory (default <out>/maps)");
}

RunConfig resolve(const CommonFlags& f) {
  RunConfig cfg;
  if (!f.config_path.empty()) cfg = load_config(f.config_path);
  if (f.seed.has_value()) cfg.seed = *f.seed;
  if (f.jobs.has_value()) cfg.jobs = *f.jobs;
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (!f.maps.empty()) cfg.maps_dir = f.maps;
  return cfg;
}

std::string pct(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * fraction);
  return buf;
}

void print_accuracy(const std::string& label, const Accuracy& acc) {
  std::cout << label << ": n=" << acc.n << " target(4-way)="
            << pct(acc.target_rate())
            << " target(121-way)=" << pct(acc.target_cell_rate())
            << " action=" << pct(acc.action_rate())
            << " state=" << pct(acc.state_rate()) << '\n';
}

int cmd_gen_maps(const CommonFlags& flags, std::optional<int> map_count) {
  RunConfig cfg = resolve(flags);
  if (map_count.has_value()) {
    cfg.train_map_pool = *map_count;
    if (*map_count == 0) cfg.test_map_count = 0;  // empty run, empty index
  }
  Pipeline p(cfg);
  p.ensure_maps();
  std::cout << "maps: " << p.train_pool().size() << " train + "
            << p.test_maps().size() << " test in " << p.maps_dir().string()
            << '\n';
  return kExitOk;
}

int cmd_gen_data(const CommonFlags& flags, std::optional<int> map_count) {
  RunConfig cfg = resolve(flags);
  Pipeline p(cfg);
  const int count = map_count.value_or(cfg.train_map_pool);
  DatasetManifest manifest;
  const Dataset ds = p.training_dataset(count, /*run_seed=*/0, &manifest);

  const fs::path dir = p.out() / "data" / ("train-m" + std::to_string(count));
  fs::create_directories(dir);
  save_dataset(dir.string(), ds);
  save_manifest((dir / "manifest.txt").string(), manifest);

  std::cout << "dataset: " << manifest.total_behaviours << " behaviours on "
            << count << " maps, " << manifest.total_samples << " samples ("
            << manifest.failed_episodes << " failed episodes, "
            << manifest.skipped_samples << " skipped samples) -> "
            << dir.string() << '\n';
  std::cout << "steps to target: mean " << manifest.steps_to_target.mean
            << " variance " << manifest.steps_to_target.variance << '\n';
  std::cout << "steps hidden: mean " << manifest.steps_hidden.mean
            << " variance " << manifest.steps_hidden.variance << '\n';
  std::cout << "steps after visible: mean "
            << manifest.steps_after_visible.mean << " variance "
            << manifest.steps_after_visible.variance << '\n';

  const Expectations exp = built_in_expectations();
  std::cout << expectation_line(exp, "dataset.steps_to_target.mean",
                                manifest.steps_to_target.mean)
            << '\n'
            << expectation_line(exp, "dataset.steps_to_target.variance",
                                manifest.steps_to_target.variance)
            << '\n'
            << expectation_line(exp, "dataset.steps_hidden.mean",
                                manifest.steps_hidden.mean)
            << '\n'
            << expectation_line(exp, "dataset.steps_hidden.variance",
                                manifest.steps_hidden.variance)
            << '\n'
            << expectation_line(exp, "dataset.steps_after_visible.mean",
                                manifest.steps_after_visible.mean)
            << '\n'
            << expectation_line(exp, "dataset.steps_after_visible.variance",
                                manifest.steps_after_visible.variance)
            << '\n';
  if (count == 60 || count == 300) {
    const std::string key =
        "dataset.behaviours." + std::to_string(count) + "maps";
    std::cout << expectation_line(
                     exp, key,
                     static_cast<double>(manifest.total_behaviours))
              << '\n';
  }
  return kExitOk;
}

int cmd_train(const CommonFlags& flags, const std::string& arch_name,
              int map_count, std::optional<std::uint64_t> run_seed_flag,
              bool lr_sweep) {
  RunConfig cfg = resolve(flags);
  const Variant arch = variant_from_name(arch_name);
  const std::uint64_t run_seed = run_seed_flag.value_or(
      cfg.experiment_seeds.empty() ? 1 : cfg.experiment_seeds.front());

  Pipeline p(cfg);
  if (lr_sweep) {
    if (cfg.lr_levels.empty()) throw UsageError("lr_levels is empty");
    Dataset ds = p.training_dataset(map_count, run_seed);
    double best_lr = cfg.lr_levels.front();
    double best_val = std::numeric_limits<double>::infinity();
    std::optional<ObserverModel<float>> best_model;
    TrainHistory best_history;
    for (double lr : cfg.lr_levels) {
      ObserverModel<float> model(arch, p.model_init_seed(map_count, run_seed));
      TrainConfig tc = cfg.train;
      tc.base_lr = lr;
      tc.seed = p.train_loop_seed(map_count, run_seed);
      const TrainHistory h = train(model, ds, tc);
      std::cout << "lr " << lr << ": best val " << h.best_val << " at epoch "
                << h.best_epoch << '\n';
      if (h.best_val < best_val) {
        best_val = h.best_val;
        best_lr = lr;
        best_model.emplace(std::move(model));
        best_history = h;
      }
    }
    std::cout << "best lr: " << best_lr << " (val " << best_val << ")\n";
    // Persist under the pipeline cache key of a config with that lr.
    RunConfig chosen = cfg;
    chosen.train.base_lr = best_lr;
    Pipeline saver(chosen);
    saver.save_model(*best_model, best_history, arch, map_count, run_seed);
    std::cout << "checkpoint: "
              << saver.model_path(arch, map_count, run_seed).string() << '\n';
    return kExitOk;
  }

  TrainHistory history;
  p.trained_model(arch, map_count, run_seed, &history);
  std::cout << "checkpoint: " << p.model_path(arch, map_count, run_seed).string()
            << '\n';
  if (!history.epochs.empty()) {
    std::cout << "epochs: " << history.epochs.size() << ", best val "
              << history.best_val << " at epoch " << history.best_epoch;
    if (history.stopped_epoch > 0) {
      std::cout << " (early stop at " << history.stopped_epoch << ")";
    }
    std::cout << '\n';
  }
  return kExitOk;
}

int cmd_eval(const CommonFlags& flags, const std::string& arch_name,
             int map_count, std::optional<std::uint64_t> run_seed_flag,
             int budget, double speed, const std::string& mode_name) {
  RunConfig cfg = resolve(flags);
  const Variant arch = variant_from_name(arch_name);
  const std::uint64_t run_seed = run_seed_flag.value_or(
      cfg.experiment_seeds.empty() ? 1 : cfg.experiment_seeds.front());
  Pipeline p(cfg);
  const fs::path path = p.model_path(arch, map_count, run_seed);
  if (!fs::exists(path)) {
    throw InputError("no checkpoint at " + path.string() + "; run `tomsyn " +
                     "train --arch " + arch_name + " --map-count " +
                     std::to_string(map_count) + "` first");
  }
  ObserverModel<float> model = p.trained_model(arch, map_count, run_seed);

  EvalCondition cond;
  cond.mode = distractor_mode_from_name(mode_name);
  cond.budget = budget;
  cond.speed = speed;
  DatasetManifest manifest;
  const Dataset test = p.test_eval_dataset(cond, &manifest);
  if (test.size() == 0) throw InputError("evaluation produced no samples");

  std::cout << "condition " << condition_tag(cond) << ", model "
            << variant_name(arch) << "-m" << map_count << "-s" << run_seed
            << '\n';
  print_accuracy("all", evaluate(model, test));
  std::vector<int> hidden;
  std::vector<int> visible;
  for (int i = 0; i < test.size(); ++i) {
    (test.info[i].visible ? visible : hidden).push_back(i);
  }
  if (!visible.empty()) {
    print_accuracy("visible", evaluate(model, test, &visible));
  }
  if (!hidden.empty()) {
    print_accuracy("hidden", evaluate(model, test, &hidden));
  }
  if (manifest.skipped_samples > 0) {
    std::cout << "note: " << manifest.skipped_samples
              << " infeasible placements skipped\n";
  }
  return kExitOk;
}

int cmd_experiment(const CommonFlags& flags, const std::string& name) {
  RunConfig cfg = resolve(flags);
  Pipeline p(cfg);
  const ExperimentSpec spec = spec_from_config(cfg, name);

  ResultTable table;
  if (spec.name == "learning_curve") {
    table = run_learning_curve(p, spec);
  } else if (spec.name == "hidden_target") {
    table = run_hidden_target(p, spec);
  } else if (spec.name == "distractor_ignored") {
    table = run_distractor_grid(p, spec, DistractorMode::Kind::Ignored);
  } else if (spec.name == "distractor_aligned") {
    table = run_distractor_grid(p, spec, DistractorMode::Kind::Aligned);
  } else if (spec.name == "generalization_budget") {
    table = run_generalization_cognitive(p, spec);
  } else {
    table = run_generalization_speed(p, spec);
  }

  fs::create_directories(p.results_dir());
  const fs::path csv = p.results_dir() / (spec.name + ".csv");
  save_results_csv(csv.string(), table);
  save_summary_csv((p.results_dir() / (spec.name + "-summary.csv")).string(),
                   summarize_results(table));
  std::cout << render_report({table}, built_in_expectations());
  std::cout << "results: " << csv.string() << '\n';
  return kExitOk;
}

int cmd_report(const CommonFlags& flags) {
  RunConfig cfg = resolve(flags);
  Pipeline p(cfg);
  std::vector<ResultTable> tables;
  for (const char* name : kExperimentNames) {
    const fs::path csv = p.results_dir() / (std::string(name) + ".csv");
    if (fs::exists(csv)) tables.push_back(load_results_csv(csv.string()));
  }
  if (tables.empty()) {
    throw InputError("no results in " + p.results_dir().string() +
                     "; run `tomsyn experiment <name>` first");
  }
  const std::string report = render_report(tables, built_in_expectations());
  std::cout << report;
  const fs::path out_path = p.out() / "report.txt";
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw InputError("cannot write " + out_path.string());
  f << report;
  std::cout << "report: " << out_path.string() << '\n';
  return kExitOk;
}

int cmd_config(const CommonFlags& flags) {
  std::cout << emit_config(resolve(flags));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"partially-observing gridworld actors, observed by "
               "belief-predicting networks"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::optional<int> map_count_opt;
  std::string arch = "beliefs";
  int map_count = 5;
  std::optional<std::uint64_t> run_seed;
  int budget = 0;
  double speed = 1.0;
  std::string distractor_mode = "random";
  bool lr_sweep = false;
  std::string experiment_name;
  int rc = kExitOk;

  CLI::App* gen_maps = app.add_subcommand("gen-maps", "generate the map pool");
  add_common(gen_maps, flags);
  gen_maps->add_option("--map-count", map_count_opt, "training map count");
  gen_maps->callback([&] { rc = cmd_gen_maps(flags, map_count_opt); });

  CLI::App* gen_data =
      app.add_subcommand("gen-data", "run actors and encode the dataset");
  add_common(gen_data, flags);
  gen_data->add_option("--map-count", map_count_opt,
                       "training maps to include (default: all)");
  gen_data->callback([&] { rc = cmd_gen_data(flags, map_count_opt); });

  CLI::App* train_cmd = app.add_subcommand("train", "train one observer");
  add_common(train_cmd, flags);
  train_cmd->add_option("--arch", arch, "beliefs|nobeliefs")->required();
  train_cmd->add_option("--map-count", map_count, "training maps")->required();
  train_cmd->add_option("--run-seed", run_seed,
                        "per-model seed (default: first experiment seed)");
  train_cmd->add_flag("--lr-sweep", lr_sweep,
                      "train once per configured lr level, keep the best");
  train_cmd->callback(
      [&] { rc = cmd_train(flags, arch, map_count, run_seed, lr_sweep); });

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate one observer");
  add_common(eval_cmd, flags);
  eval_cmd->add_option("--arch", arch, "beliefs|nobeliefs")->required();
  eval_cmd->add_option("--map-count", map_count, "training maps")->required();
  eval_cmd->add_option("--run-seed", run_seed,
                       "per-model seed (default: first experiment seed)");
  eval_cmd->add_option("--budget", budget,
                       "actor search budget (default: training budget)");
  eval_cmd->add_option("--speed", speed, "replay speed factor");
  eval_cmd->add_option("--distractor-mode", distractor_mode,
                       "random | ignored:K | aligned:K");
  eval_cmd->callback([&] {
    rc = cmd_eval(flags, arch, map_count, run_seed, budget, speed,
                  distractor_mode);
  });

  CLI::App* exp_cmd = app.add_subcommand("experiment", "run a named experiment");
  add_common(exp_cmd, flags);
  exp_cmd
      ->add_option("name", experiment_name,
                   "learning_curve | hidden_target | distractor_ignored | "
                   "distractor_aligned | generalization_budget | "
                   "generalization_speed")
      ->required();
  exp_cmd->callback([&] { rc = cmd_experiment(flags, experiment_name); });

  CLI::App* report_cmd =
      app.add_subcommand("report", "aggregate results and compare references");
  add_common(report_cmd, flags);
  report_cmd->callback([&] { rc = cmd_report(flags); });

  CLI::App* config_cmd =
      app.add_subcommand("config", "print the effective configuration");
  add_common(config_cmd, flags);
  config_cmd->callback([&] { rc = cmd_config(flags); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInsufficientInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return rc;
}
