#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tomsyn/config.hpp"
#include "tomsyn/dataset.hpp"
#include "tomsyn/observer.hpp"
#include "tomsyn/training.hpp"

namespace tomsyn {

// How test samples are produced for one evaluation condition.
struct EvalCondition {
  DistractorMode mode;  // Random unless a distractor experiment says otherwise
  int budget = 0;       // actor search budget; 0 = the training budget
  double speed = 1.0;   // trajectory-speed resampling factor
};

// Stable short label: "random", "ignored:2", "aligned:3", with "/b<N>" and
// "/x<factor>" suffixes for non-default budget or speed.
std::string condition_tag(const EvalCondition& cond);

// Orchestrates the artifact chain maps -> actor runs -> datasets -> trained
// models under one output directory. Every stage is deterministic in
// (config, global seed); persistent stages carry a fingerprint sidecar and
// are regenerated when the inputs that produced them changed, so reruns are
// idempotent and interrupted runs resume where they stopped.
class Pipeline {
 public:
  explicit Pipeline(RunConfig cfg);

  const RunConfig& config() const { return cfg_; }
  const std::filesystem::path& out() const { return out_; }
  std::filesystem::path maps_dir() const;
  std::filesystem::path models_dir() const { return out_ / "models"; }
  std::filesystem::path results_dir() const { return out_ / "results"; }

  // Map pool + disjoint test set, persisted as one file per map plus an
  // index manifest.
  void ensure_maps();
  const std::vector<GridMap>& train_pool();
  const std::vector<GridMap>& test_maps();
  // First `map_count` maps of the pool, so smaller training sets nest
  // inside larger ones.
  std::vector<GridMap> train_subset(int map_count);

  // Actor runs, persisted per budget. Budget 0 means the training budget.
  const std::vector<Trajectory>& train_trajectories();
  const std::vector<Trajectory>& test_trajectories(int budget = 0);

  // Built in memory (fast relative to the actor runs they come from).
  Dataset training_dataset(int map_count, std::uint64_t run_seed,
                           DatasetManifest* manifest = nullptr);
  Dataset test_eval_dataset(const EvalCondition& cond,
                            DatasetManifest* manifest = nullptr);

  std::filesystem::path model_path(Variant v, int map_count,
                                   std::uint64_t run_seed) const;
  bool model_cached(Variant v, int map_count, std::uint64_t run_seed) const;
  // Loads the cached checkpoint or trains one (then persists checkpoint,
  // history, and fingerprint). Both variants at the same (map_count,
  // run_seed) share the same init seed, so their common layers start from
  // identical weights.
  ObserverModel<float> trained_model(Variant v, int map_count,
                                     std::uint64_t run_seed,
                                     TrainHistory* history = nullptr);
  // Persists an externally trained model under the cache key this pipeline
  // would use for (v, map_count, run_seed).
  void save_model(const ObserverModel<float>& model,
                  const TrainHistory& history, Variant v, int map_count,
                  std::uint64_t run_seed);
  // Seeds shared by trained_model and external trainers (lr sweeps).
  std::uint64_t model_init_seed(int map_count, std::uint64_t run_seed) const;
  std::uint64_t train_loop_seed(int map_count, std::uint64_t run_seed) const;

 private:
  std::uint64_t map_seed(const std::string& id) const;
  void load_maps_from_disk();
  void generate_and_save_maps();
  std::string maps_fingerprint() const;
  std::string traj_fingerprint(const std::string& role, int budget) const;
  std::string model_fingerprint(Variant v, int map_count,
                                std::uint64_t run_seed) const;
  const std::vector<Trajectory>& trajectories_for(const std::string& role,
                                                  int budget);

  RunConfig cfg_;
  std::filesystem::path out_;
  std::optional<std::vector<GridMap>> train_pool_;
  std::optional<std::vector<GridMap>> test_maps_;
  // Keyed by "<role>-b<budget>"; "train" runs at the training budget only.
  std::map<std::string, std::vector<Trajectory>> traj_cache_;
};

// Reads a sidecar fingerprint file; empty string when absent.
std::string read_fingerprint(const std::filesystem::path& path);
void write_fingerprint(const std::filesystem::path& path,
                       const std::string& value);

}  // namespace tomsyn
