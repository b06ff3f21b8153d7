#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tomsyn/planner.hpp"

namespace tomsyn {

inline constexpr int kTrajectoriesPerMap = 30;
inline constexpr int kDistractorCount = 3;
inline constexpr int kObjectCount = kDistractorCount + 1;
inline constexpr int kMaxPastSteps = 5;

// Input plane layout: 9 tiled action-count planes, 4 object planes, 5 past
// position planes (oldest first), walls, current position. 20 total.
inline constexpr int kPlaneActions = 0;
inline constexpr int kPlaneObjects = 9;
inline constexpr int kPlanePastPos = 13;
inline constexpr int kPlaneWalls = 18;
inline constexpr int kPlaneCurrent = 19;
inline constexpr int kPlaneCount = 20;
inline constexpr int kInputSize = kCellCount * kPlaneCount;

// Channels-last: plane index varies fastest, so one cell's 20 features are
// contiguous and a sample is one contiguous row for batched matmuls.
struct InputTensor {
  std::array<float, kInputSize> values{};

  static constexpr int offset(int row, int col, int plane) {
    return (row * kGridSize + col) * kPlaneCount + plane;
  }
  float at(int row, int col, int plane) const {
    return values[offset(row, col, plane)];
  }
  float& at(int row, int col, int plane) {
    return values[offset(row, col, plane)];
  }
};

// The target plus the three decoys rendered into the observer input. Object
// 0 is the true target; a correct 4-way prediction picks index 0.
struct ObjectSet {
  Position target;
  std::array<Position, kDistractorCount> distractors;

  Position object(int index) const {
    return index == 0 ? target : distractors[index - 1];
  }
};

struct DistractorMode {
  enum class Kind { Random, Ignored, Aligned };
  Kind kind = Kind::Random;
  int k = 0;  // how many specially-placed distractors, 1..3; 0 for Random
};

DistractorMode distractor_mode_from_name(std::string_view name);
std::string distractor_mode_name(DistractorMode mode);

// Everything known about one encoded chunk besides the tensor itself.
struct SampleInfo {
  int map_index = 0;
  int episode = 0;
  int step = 0;           // evaluation step t within the trajectory
  bool visible = false;   // target_visible at step t
  ObjectSet objects;
};

struct Sample {
  InputTensor input;
  int label_target = 0;       // cell index of the true target
  int label_next_action = 0;  // action taken at step t
  int label_next_state = 0;   // cell index of the position at step t+1
  BeliefState label_belief;   // belief_before at step t
  SampleInfo info;
};

// Columnar sample storage; row i of `inputs` is sample i's flat tensor.
struct Dataset {
  std::vector<std::string> map_ids;
  std::vector<float> inputs;          // n x kInputSize
  std::vector<std::int32_t> label_target;
  std::vector<std::int32_t> label_action;
  std::vector<std::int32_t> label_state;
  std::vector<float> label_belief;    // n x kCellCount
  std::vector<SampleInfo> info;

  int size() const { return static_cast<int>(label_target.size()); }
  const float* input_row(int i) const {
    return inputs.data() + static_cast<std::size_t>(i) * kInputSize;
  }
  const float* belief_row(int i) const {
    return label_belief.data() + static_cast<std::size_t>(i) * kCellCount;
  }
};

struct SummaryStat {
  double mean = 0.0;
  double variance = 0.0;
};

struct DatasetManifest {
  std::vector<std::string> map_ids;
  int trajectories_per_map = kTrajectoriesPerMap;
  std::int64_t total_behaviours = 0;
  std::int64_t total_samples = 0;
  std::uint64_t seed = 0;
  int failed_episodes = 0;   // hit the step cap without reaching the target
  int skipped_samples = 0;   // distractor placement infeasible
  SummaryStat steps_to_target;      // successful episodes only
  SummaryStat steps_hidden;         // steps before the first sighting
  SummaryStat steps_after_visible;  // moves from first sighting to the end
};

// 30 trajectories per map, random distinct start/target each. Pure function
// of (maps, cfg, seed); parallel-safe because every episode derives its own
// seed from (seed, map id, episode).
std::vector<Trajectory> generate_trajectories(
    const std::vector<GridMap>& maps, const PomcpConfig& cfg,
    std::uint64_t seed, int per_map = kTrajectoriesPerMap, int max_steps = 40);

DatasetManifest summarize(const std::vector<GridMap>& maps,
                          const std::vector<Trajectory>& trajectories,
                          std::uint64_t seed);

// Places the 3 decoys for the chunk ending at step t. Returns nothing when
// the mode's eligible cells cannot seat k distractors (caller skips and
// counts the sample). Deterministic in (inputs, seed).
std::optional<ObjectSet> inject_distractors(const GridMap& map,
                                            const Trajectory& traj, int t,
                                            DistractorMode mode,
                                            std::uint64_t seed);

// Encodes the chunk ending at step t. The seed shuffles which object lands
// on which object plane, so no plane index gives the target away.
InputTensor encode(const GridMap& map, const Trajectory& traj, int t,
                   const ObjectSet& objects, std::uint64_t seed);

struct Labels {
  int target = 0;
  int next_action = 0;
  int next_state = 0;
  BeliefState belief;
};

// Supervision for the chunk ending at step t; requires a successor step.
Labels label(const Trajectory& traj, int t);

// One sample per usable step of every trajectory. `manifest`, when given,
// receives the total/skipped sample counts.
Dataset build_dataset(const std::vector<GridMap>& maps,
                      const std::vector<Trajectory>& trajectories,
                      DistractorMode mode, std::uint64_t seed,
                      DatasetManifest* manifest = nullptr);

}  // namespace tomsyn
