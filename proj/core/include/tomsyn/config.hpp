#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tomsyn/dataset.hpp"
#include "tomsyn/gridworld.hpp"
#include "tomsyn/planner.hpp"
#include "tomsyn/training.hpp"

namespace tomsyn {

// Everything a full run needs, in one human-editable JSON file. Every field
// has a default; parse -> emit round-trips unchanged; CLI flags override
// individual fields after parsing.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string out_dir;  // empty -> $TOM_SYNERGY_OUT if set, else "out"
  int jobs = 1;

  // Optional maps-directory override (--maps). Not part of the config file;
  // empty means "<out>/maps".
  std::string maps_dir;

  // Map generation: a pool of train maps plus a disjoint test set.
  MapGenParams map_params;
  int train_map_pool = 300;
  int test_map_count = 10;

  // Actor runs.
  PomcpConfig actor;  // seed field ignored; per-episode seeds are derived
  int trajectories_per_map = 30;
  int max_steps = 40;

  // Observer training.
  TrainConfig train;  // seed field ignored; derived per run
  std::vector<double> lr_levels = {0.00015, 0.00032, 0.00049,
                                   0.00066, 0.00083, 0.001};

  // Experiment matrix.
  std::vector<int> curve_map_counts = {5, 10, 15, 20, 25, 30, 60, 120, 300};
  std::vector<int> distractor_map_counts = {25, 120};
  int generalization_map_count = 25;
  std::vector<std::uint64_t> experiment_seeds = {1, 2, 3, 4, 5};
  std::vector<int> test_budgets = {150, 50, 25, 5};
  std::vector<double> speed_factors = {0.75, 0.9, 1.1, 1.25};

  // Fine-tuning for the slow-actor follow-up.
  int finetune_maps = 5;
  int finetune_epochs = 10;
  double finetune_lr = 0.000125;  // base_lr after the first two decays

  // Resolved output directory: out_dir if set, else $TOM_SYNERGY_OUT,
  // else "out".
  std::string resolved_out() const;
};

void save_config(const std::string& path, const RunConfig& cfg);
RunConfig load_config(const std::string& path);

// JSON text forms used by save/load; emit(parse(text)) == text for any
// emitted config.
std::string emit_config(const RunConfig& cfg);
RunConfig parse_config(const std::string& text, const std::string& what);

}  // namespace tomsyn
