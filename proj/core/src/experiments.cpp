#include "tomsyn/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "tomsyn/error.hpp"
#include "tomsyn/random.hpp"
#include "tomsyn/stats.hpp"
#include "tomsyn/text.hpp"

namespace tomsyn {
namespace {

constexpr std::string_view kResultsHeader =
    "experiment,condition,architecture,map_count,seed,n,accuracy";
constexpr std::string_view kSummaryHeader =
    "experiment,condition,architecture,map_count,mean,std,gain,p_value";

std::string canonical_name(std::string name) {
  std::replace(name.begin(), name.end(), '-', '_');
  return name;
}

std::vector<int> rows_with_visibility(const Dataset& ds, bool visible) {
  std::vector<int> rows;
  for (int i = 0; i < ds.size(); ++i) {
    if (ds.info[i].visible == visible) rows.push_back(i);
  }
  return rows;
}

void note_skips(ResultTable& table, const std::string& tag,
                const DatasetManifest& manifest) {
  if (manifest.skipped_samples == 0) return;
  const double attempts = static_cast<double>(manifest.total_samples +
                                              manifest.skipped_samples);
  const double rate = manifest.skipped_samples / attempts;
  std::ostringstream s;
  s << (rate >= 0.05 ? "FLAG: " : "") << "condition " << tag << ": skipped "
    << manifest.skipped_samples << " of "
    << static_cast<std::int64_t>(attempts)
    << " placement attempts (" << std::fixed << std::setprecision(1)
    << 100.0 * rate << "%)";
  table.notes.push_back(s.str());
}

// Accuracy rows for every (map_count, seed, architecture) of the spec on
// one prepared evaluation set.
void eval_models(Pipeline& p, const ExperimentSpec& spec, const Dataset& test,
                 const std::vector<int>* indices, const std::string& condition,
                 ResultTable& table) {
  for (int map_count : spec.map_counts) {
    for (std::uint64_t seed : spec.seeds) {
      for (Variant arch : spec.architectures) {
        ObserverModel<float> model = p.trained_model(arch, map_count, seed);
        const Accuracy acc = evaluate(model, test, indices);
        table.rows.push_back({spec.name, condition,
                              std::string(variant_name(arch)), map_count, seed,
                              acc.n, acc.target_rate()});
      }
    }
  }
}

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * fraction);
  return buf;
}

}  // namespace

ExperimentSpec spec_from_config(const RunConfig& cfg, const std::string& name) {
  ExperimentSpec spec;
  spec.name = canonical_name(name);
  spec.seeds = cfg.experiment_seeds;
  if (spec.name == "learning_curve" || spec.name == "hidden_target") {
    spec.map_counts = cfg.curve_map_counts;
  } else if (spec.name == "distractor_ignored" ||
             spec.name == "distractor_aligned") {
    spec.map_counts = cfg.distractor_map_counts;
  } else if (spec.name == "generalization_budget") {
    spec.map_counts = {cfg.generalization_map_count};
    spec.budgets = cfg.test_budgets;
  } else if (spec.name == "generalization_speed") {
    spec.map_counts = {cfg.generalization_map_count};
    spec.speed_factors = cfg.speed_factors;
  } else {
    throw UsageError("unknown experiment '" + name +
                     "'; expected one of: learning_curve, hidden_target, "
                     "distractor_ignored, distractor_aligned, "
                     "generalization_budget, generalization_speed");
  }
  return spec;
}

void ResultTable::append(const ResultTable& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
  notes.insert(notes.end(), other.notes.begin(), other.notes.end());
}

ResultTable run_learning_curve(Pipeline& p, const ExperimentSpec& spec) {
  ResultTable table;
  DatasetManifest manifest;
  const Dataset test = p.test_eval_dataset(EvalCondition{}, &manifest);
  if (test.size() == 0) throw InputError("test set produced no samples");
  note_skips(table, "random", manifest);
  eval_models(p, spec, test, nullptr, "all", table);
  return table;
}

ResultTable run_hidden_target(Pipeline& p, const ExperimentSpec& spec) {
  ResultTable table;
  DatasetManifest manifest;
  const Dataset test = p.test_eval_dataset(EvalCondition{}, &manifest);
  note_skips(table, "random", manifest);
  const std::vector<int> hidden = rows_with_visibility(test, false);
  const std::vector<int> visible = rows_with_visibility(test, true);
  if (hidden.empty()) {
    throw InputError("no hidden-target samples in the test set");
  }
  if (visible.empty()) {
    throw InputError("no visible-target samples in the test set");
  }
  eval_models(p, spec, test, &hidden, "hidden", table);
  eval_models(p, spec, test, &visible, "visible", table);
  return table;
}

ResultTable run_distractor_condition(Pipeline& p, const ExperimentSpec& spec,
                                     DistractorMode mode, bool visible_only) {
  if (mode.k < 1 || mode.k > kDistractorCount) {
    throw UsageError("distractor k must be in 1..3");
  }
  ResultTable table;
  DatasetManifest manifest;
  const Dataset test =
      p.test_eval_dataset(EvalCondition{mode, 0, 1.0}, &manifest);
  const std::string condition = distractor_mode_name(mode) +
                                (visible_only ? "/visible" : "/hidden");
  note_skips(table, condition, manifest);
  const std::vector<int> rows = rows_with_visibility(test, visible_only);
  if (rows.empty()) {
    throw InputError("no qualifying samples for condition " + condition);
  }
  eval_models(p, spec, test, &rows, condition, table);
  return table;
}

ResultTable run_distractor_grid(Pipeline& p, const ExperimentSpec& spec,
                                DistractorMode::Kind kind) {
  ResultTable table;
  for (int k = 1; k <= kDistractorCount; ++k) {
    for (bool visible : {true, false}) {
      table.append(
          run_distractor_condition(p, spec, DistractorMode{kind, k}, visible));
    }
  }
  return table;
}

ResultTable run_generalization_cognitive(Pipeline& p,
                                         const ExperimentSpec& spec) {
  if (spec.budgets.empty()) throw UsageError("no test budgets configured");
  ResultTable table;
  for (int budget : spec.budgets) {
    DatasetManifest manifest;
    const Dataset test = p.test_eval_dataset(
        EvalCondition{DistractorMode{}, budget, 1.0}, &manifest);
    const std::string condition = "b" + std::to_string(budget);
    note_skips(table, condition, manifest);
    if (test.size() == 0) {
      throw InputError("no samples for condition " + condition);
    }
    eval_models(p, spec, test, nullptr, condition, table);
  }
  return table;
}

ResultTable run_generalization_speed(Pipeline& p, const ExperimentSpec& spec) {
  if (spec.speed_factors.empty()) throw UsageError("no speed factors configured");
  ResultTable table;
  for (double factor : spec.speed_factors) {
    DatasetManifest manifest;
    const Dataset test = p.test_eval_dataset(
        EvalCondition{DistractorMode{}, 0, factor}, &manifest);
    const std::string condition = "x" + fmt_float(factor);
    note_skips(table, condition, manifest);
    if (test.size() == 0) {
      throw InputError("no samples for condition " + condition);
    }
    eval_models(p, spec, test, nullptr, condition, table);
  }

  // Brief slow-replay finetune on a few training maps, then re-evaluate on
  // the slowest factor.
  const RunConfig& cfg = p.config();
  const double slow =
      *std::min_element(spec.speed_factors.begin(), spec.speed_factors.end());
  const Dataset slow_test =
      p.test_eval_dataset(EvalCondition{DistractorMode{}, 0, slow});

  const std::vector<GridMap> tune_maps = p.train_subset(cfg.finetune_maps);
  const std::vector<Trajectory>& all = p.train_trajectories();
  const std::size_t take = static_cast<std::size_t>(cfg.finetune_maps) *
                           static_cast<std::size_t>(cfg.trajectories_per_map);
  std::vector<Trajectory> tune_trajs;
  tune_trajs.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    tune_trajs.push_back(resample_speed(all[i], slow));
  }
  DatasetManifest tune_manifest;
  const Dataset tune = build_dataset(
      tune_maps, tune_trajs, DistractorMode{},
      derive_seed(cfg.seed, {hash_str("finetune-data"), hash_str(fmt_float(slow))}),
      &tune_manifest);
  note_skips(table, "finetune-data", tune_manifest);
  if (tune.size() == 0) throw InputError("finetune dataset is empty");

  const std::string condition = "x" + fmt_float(slow) + "+finetuned";
  for (int map_count : spec.map_counts) {
    for (std::uint64_t seed : spec.seeds) {
      for (Variant arch : spec.architectures) {
        ObserverModel<float> model = p.trained_model(arch, map_count, seed);
        TrainConfig tc = cfg.train;
        tc.base_lr = cfg.finetune_lr;
        tc.max_epochs = cfg.finetune_epochs;
        tc.val_fraction = 0.0;
        tc.seed = derive_seed(cfg.seed, {hash_str("finetune"),
                                         static_cast<std::uint64_t>(map_count),
                                         seed});
        finetune(model, tune, tc);
        const Accuracy acc = evaluate(model, slow_test);
        table.rows.push_back({spec.name, condition,
                              std::string(variant_name(arch)), map_count, seed,
                              acc.n, acc.target_rate()});
      }
    }
  }
  return table;
}

Trajectory resample_speed(const Trajectory& traj, double factor) {
  if (!(factor >= 0.01)) {
    throw UsageError("speed factor must be at least 0.01");
  }
  if (traj.steps.size() <= 1 || factor == 1.0) return traj;

  Trajectory out;
  out.map_id = traj.map_id;
  out.episode = traj.episode;
  out.target = traj.target;

  const long last = static_cast<long>(traj.steps.size()) - 1;
  std::vector<long> sources;
  sources.push_back(0);
  long s = 0;
  long prev_floor = 0;
  for (long tick = 1; s < last; ++tick) {
    const long cur_floor =
        static_cast<long>(std::floor(static_cast<double>(tick) * factor));
    if (cur_floor > prev_floor) {
      s = std::min(last, s + (cur_floor - prev_floor));
    }
    prev_floor = cur_floor;
    sources.push_back(s);
  }

  out.steps.reserve(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    TrajectoryStep step = traj.steps[sources[i]];
    if (i + 1 < sources.size()) {
      // The replayed action is whatever visibly happens next: the source
      // action when the replay advances, a hold otherwise.
      step.action = sources[i + 1] > sources[i]
                        ? traj.steps[sources[i]].action
                        : Action::Stay;
    }
    out.steps.push_back(std::move(step));
  }
  return out;
}

std::vector<SummaryRow> summarize_results(const ResultTable& table) {
  struct Group {
    std::string experiment;
    std::string condition;
    int map_count = 0;
    std::vector<std::string> arch_order;
    std::vector<std::vector<double>> accuracies;  // parallel to arch_order
  };
  std::vector<Group> groups;
  for (const ResultRow& row : table.rows) {
    Group* g = nullptr;
    for (Group& cand : groups) {
      if (cand.experiment == row.experiment &&
          cand.condition == row.condition && cand.map_count == row.map_count) {
        g = &cand;
        break;
      }
    }
    if (g == nullptr) {
      groups.push_back({row.experiment, row.condition, row.map_count, {}, {}});
      g = &groups.back();
    }
    std::size_t ai = 0;
    while (ai < g->arch_order.size() && g->arch_order[ai] != row.architecture) {
      ++ai;
    }
    if (ai == g->arch_order.size()) {
      g->arch_order.push_back(row.architecture);
      g->accuracies.emplace_back();
    }
    g->accuracies[ai].push_back(row.accuracy);
  }

  std::vector<SummaryRow> out;
  for (const Group& g : groups) {
    const std::vector<double>* beliefs = nullptr;
    const std::vector<double>* nobeliefs = nullptr;
    for (std::size_t ai = 0; ai < g.arch_order.size(); ++ai) {
      if (g.arch_order[ai] == "beliefs") beliefs = &g.accuracies[ai];
      if (g.arch_order[ai] == "nobeliefs") nobeliefs = &g.accuracies[ai];
    }
    std::optional<double> gain;
    std::optional<double> p_value;
    if (beliefs != nullptr && nobeliefs != nullptr) {
      gain = mean_of(*beliefs) - mean_of(*nobeliefs);
      if (beliefs->size() >= 2 && nobeliefs->size() >= 2) {
        p_value = significance(*beliefs, *nobeliefs);
      }
    }
    for (std::size_t ai = 0; ai < g.arch_order.size(); ++ai) {
      out.push_back({g.experiment, g.condition, g.arch_order[ai], g.map_count,
                     mean_of(g.accuracies[ai]), sample_std(g.accuracies[ai]),
                     gain, p_value});
    }
  }
  return out;
}

void save_results_csv(const std::string& path, const ResultTable& table) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open for writing: " + path);
  f << kResultsHeader << '\n';
  for (const ResultRow& r : table.rows) {
    f << r.experiment << ',' << r.condition << ',' << r.architecture << ','
      << r.map_count << ',' << r.seed << ',' << r.n << ','
      << fmt_float(r.accuracy) << '\n';
  }
  if (!f.good()) throw InputError("write failed: " + path);
}

ResultTable load_results_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open: " + path);
  std::string line;
  if (!std::getline(f, line) || line != kResultsHeader) {
    throw IntegrityError(path + ": missing results header");
  }
  ResultTable table;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest = line;
    while (true) {
      const std::size_t comma = rest.find(',');
      if (comma == std::string_view::npos) {
        fields.push_back(rest);
        break;
      }
      fields.push_back(rest.substr(0, comma));
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 7) {
      throw IntegrityError(path + ": malformed results row '" + line + "'");
    }
    ResultRow row;
    row.experiment = std::string(fields[0]);
    row.condition = std::string(fields[1]);
    row.architecture = std::string(fields[2]);
    row.map_count = parse_int<int>(fields[3], "map_count");
    row.seed = parse_int<std::uint64_t>(fields[4], "seed");
    row.n = parse_int<int>(fields[5], "n");
    row.accuracy = parse_float<double>(fields[6], "accuracy");
    if (row.accuracy < 0.0 || row.accuracy > 1.0) {
      throw IntegrityError(path + ": accuracy out of [0,1] in '" + line + "'");
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void save_summary_csv(const std::string& path,
                      const std::vector<SummaryRow>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open for writing: " + path);
  f << kSummaryHeader << '\n';
  for (const SummaryRow& r : rows) {
    f << r.experiment << ',' << r.condition << ',' << r.architecture << ','
      << r.map_count << ',' << fmt_float(r.mean) << ',' << fmt_float(r.stddev)
      << ',';
    if (r.gain.has_value()) f << fmt_float(*r.gain);
    f << ',';
    if (r.p_value.has_value()) f << fmt_float(*r.p_value);
    f << '\n';
  }
  if (!f.good()) throw InputError("write failed: " + path);
}

std::vector<std::string> expectation_report(
    const std::vector<SummaryRow>& summaries, const Expectations& exp) {
  auto find = [&](std::string_view experiment, std::string_view condition,
                  std::string_view arch,
                  int map_count) -> const SummaryRow* {
    for (const SummaryRow& s : summaries) {
      if (s.experiment == experiment && s.condition == condition &&
          s.architecture == arch && s.map_count == map_count) {
        return &s;
      }
    }
    return nullptr;
  };

  std::vector<std::string> lines;
  auto check_mean = [&](const char* key, std::string_view experiment,
                        std::string_view condition, std::string_view arch,
                        int map_count) {
    if (const SummaryRow* s = find(experiment, condition, arch, map_count)) {
      lines.push_back(expectation_line(exp, key, 100.0 * s->mean));
    }
  };
  auto check_gain = [&](const char* key, std::string_view experiment,
                        std::string_view condition, int map_count) {
    if (const SummaryRow* s =
            find(experiment, condition, "beliefs", map_count);
        s != nullptr && s->gain.has_value()) {
      lines.push_back(expectation_line(exp, key, 100.0 * *s->gain));
    }
  };

  check_mean("learning_curve.beliefs.300.accuracy", "learning_curve", "all",
             "beliefs", 300);
  check_mean("learning_curve.beliefs.25.accuracy", "learning_curve", "all",
             "beliefs", 25);
  check_mean("learning_curve.nobeliefs.25.accuracy", "learning_curve", "all",
             "nobeliefs", 25);
  check_gain("learning_curve.gain.25", "learning_curve", "all", 25);
  check_mean("learning_curve.beliefs.5.accuracy", "learning_curve", "all",
             "beliefs", 5);
  check_mean("hidden_target.beliefs.15.accuracy", "hidden_target", "hidden",
             "beliefs", 15);
  check_mean("hidden_target.nobeliefs.15.accuracy", "hidden_target", "hidden",
             "nobeliefs", 15);
  check_gain("hidden_target.gain.15", "hidden_target", "hidden", 15);

  // Best accuracy anywhere in the Ignored(3) cells.
  double best_ignored3 = -1.0;
  for (const SummaryRow& s : summaries) {
    if (s.experiment == "distractor_ignored" &&
        s.condition.starts_with("ignored:3")) {
      best_ignored3 = std::max(best_ignored3, s.mean);
    }
  }
  if (best_ignored3 >= 0.0) {
    lines.push_back(
        expectation_line(exp, "ignored3.best.accuracy", 100.0 * best_ignored3));
  }

  check_mean("aligned3.visible.nobeliefs.25.accuracy", "distractor_aligned",
             "aligned:3/visible", "nobeliefs", 25);
  check_mean("aligned.visible.beliefs.120.accuracy", "distractor_aligned",
             "aligned:3/visible", "beliefs", 120);
  check_mean("aligned.visible.nobeliefs.120.accuracy", "distractor_aligned",
             "aligned:3/visible", "nobeliefs", 120);
  check_gain("aligned.visible.gain.120", "distractor_aligned",
             "aligned:3/visible", 120);
  check_mean("aligned.hidden.beliefs.120.accuracy", "distractor_aligned",
             "aligned:3/hidden", "beliefs", 120);
  check_mean("aligned.hidden.nobeliefs.120.accuracy", "distractor_aligned",
             "aligned:3/hidden", "nobeliefs", 120);
  check_gain("aligned.hidden.gain.120", "distractor_aligned",
             "aligned:3/hidden", 120);
  return lines;
}

std::string render_report(const std::vector<ResultTable>& tables,
                          const Expectations& exp) {
  std::ostringstream out;
  out << "tom-synergy results\n";
  std::vector<SummaryRow> all;
  for (const ResultTable& table : tables) {
    if (table.rows.empty()) continue;
    const std::vector<SummaryRow> summaries = summarize_results(table);
    out << "\n== " << table.rows.front().experiment << " ==\n";
    out << std::left << std::setw(24) << "condition" << std::setw(12)
        << "arch" << std::right << std::setw(6) << "maps" << std::setw(10)
        << "mean%" << std::setw(9) << "std%" << std::setw(9) << "gain%"
        << std::setw(12) << "p" << '\n';
    for (const SummaryRow& s : summaries) {
      out << std::left << std::setw(24) << s.condition << std::setw(12)
          << s.architecture << std::right << std::setw(6) << s.map_count
          << std::setw(10) << format_percent(s.mean) << std::setw(9)
          << format_percent(s.stddev) << std::setw(9)
          << (s.gain ? format_percent(*s.gain) : std::string("-"));
      char pbuf[24];
      if (s.p_value) {
        std::snprintf(pbuf, sizeof(pbuf), "%.4g", *s.p_value);
      } else {
        std::snprintf(pbuf, sizeof(pbuf), "-");
      }
      out << std::setw(12) << pbuf << '\n';
    }
    for (const std::string& note : table.notes) {
      out << "  note: " << note << '\n';
    }
    all.insert(all.end(), summaries.begin(), summaries.end());
  }
  const std::vector<std::string> checks = expectation_report(all, exp);
  if (!checks.empty()) {
    out << "\n== reference comparison ==\n";
    for (const std::string& line : checks) out << line << '\n';
  }
  return out.str();
}

}  // namespace tomsyn
