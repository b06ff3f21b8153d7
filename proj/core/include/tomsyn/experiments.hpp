#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tomsyn/expectations.hpp"
#include "tomsyn/pipeline.hpp"

namespace tomsyn {

// Canonical experiment names accepted by the CLI and used in result files.
inline constexpr const char* kExperimentNames[] = {
    "learning_curve",        "hidden_target",
    "distractor_ignored",    "distractor_aligned",
    "generalization_budget", "generalization_speed"};

struct ExperimentSpec {
  std::string name;
  std::vector<Variant> architectures = {Variant::Beliefs, Variant::NoBeliefs};
  std::vector<int> map_counts;
  std::vector<std::uint64_t> seeds;
  std::vector<int> budgets;          // generalization_budget only
  std::vector<double> speed_factors; // generalization_speed only
};

// The spec an experiment name runs with under the given config.
// UsageError for unknown names ('-' and '_' are interchangeable).
ExperimentSpec spec_from_config(const RunConfig& cfg, const std::string& name);

struct ResultRow {
  std::string experiment;
  std::string condition;
  std::string architecture;
  int map_count = 0;
  std::uint64_t seed = 0;
  int n = 0;             // samples evaluated
  double accuracy = 0.0; // 4-way target accuracy in [0,1]
};

struct ResultTable {
  std::vector<ResultRow> rows;
  std::vector<std::string> notes;  // skip-rate flags etc., echoed in reports

  void append(const ResultTable& other);
};

// Per (experiment, condition, map_count, architecture) aggregate across
// seeds. gain and p_value describe the Beliefs-vs-NoBeliefs contrast of the
// group and repeat on both of its rows; absent when the counterpart
// architecture is missing (gain) or either side has fewer than two seeds
// (p_value).
struct SummaryRow {
  std::string experiment;
  std::string condition;
  std::string architecture;
  int map_count = 0;
  double mean = 0.0;
  double stddev = 0.0;
  std::optional<double> gain;
  std::optional<double> p_value;
};

std::vector<SummaryRow> summarize_results(const ResultTable& table);

// CSV, header "experiment,condition,architecture,map_count,seed,n,accuracy".
void save_results_csv(const std::string& path, const ResultTable& table);
ResultTable load_results_csv(const std::string& path);

// CSV, header
// "experiment,condition,architecture,map_count,mean,std,gain,p_value";
// gain/p_value cells are empty when not computable.
void save_summary_csv(const std::string& path,
                      const std::vector<SummaryRow>& rows);

// Whole-test-set accuracy per (map count, architecture, seed) with random
// distractor placement.
ResultTable run_learning_curve(Pipeline& p, const ExperimentSpec& spec);

// Same models, evaluation split into hidden-target and visible-target
// samples (conditions "hidden" and "visible"). InputError when a subset is
// empty.
ResultTable run_hidden_target(Pipeline& p, const ExperimentSpec& spec);

// One cell of the distractor grid: k decoys placed per `mode`, evaluation
// restricted to visible- or hidden-target samples.
ResultTable run_distractor_condition(Pipeline& p, const ExperimentSpec& spec,
                                     DistractorMode mode, bool visible_only);

// All k in {1,2,3} x {visible, hidden} cells for one placement kind.
ResultTable run_distractor_grid(Pipeline& p, const ExperimentSpec& spec,
                                DistractorMode::Kind kind);

// Test actors re-planned at each lower search budget (conditions "b<N>").
ResultTable run_generalization_cognitive(Pipeline& p,
                                         const ExperimentSpec& spec);

// Test actors replayed at each speed factor (conditions "x<f>"), plus the
// x0.75 re-evaluation after a brief finetune on slow-replay data from a few
// training maps (condition "x0.75+finetuned").
ResultTable run_generalization_speed(Pipeline& p, const ExperimentSpec& spec);

// Fractional-progress replay: an accumulator advances by `factor` per
// observed tick and the source step advances on every integer crossing, so
// slow factors duplicate steps (replayed as Stay) and fast factors skip
// steps. Beliefs and visibility ride along with their source step.
Trajectory resample_speed(const Trajectory& traj, double factor);

// Plain-text tables per experiment plus reference-value comparisons.
std::string render_report(const std::vector<ResultTable>& tables,
                          const Expectations& exp);

// "<key>: measured ... -> pass|OUT-OF-TOLERANCE" for every reference row
// the summaries cover.
std::vector<std::string> expectation_report(
    const std::vector<SummaryRow>& summaries, const Expectations& exp);

}  // namespace tomsyn
