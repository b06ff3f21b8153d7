#include "tomsyn/dataset.hpp"

#include <algorithm>
#include <bitset>
#include <unordered_map>

#include "tomsyn/error.hpp"
#include "tomsyn/random.hpp"

namespace tomsyn {
namespace {

using CellMask = std::bitset<kCellCount>;

// First n elements of a seeded partial Fisher-Yates over the pool, i.e. a
// uniform draw of n distinct cells in draw order.
std::vector<int> draw_distinct(std::vector<int> pool, int n, Rng& rng) {
  for (int i = 0; i < n; ++i) {
    const int j =
        i + static_cast<int>(rng.next_below(pool.size() - static_cast<std::size_t>(i)));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(n);
  return pool;
}

std::vector<int> mask_to_cells(const CellMask& mask) {
  std::vector<int> out;
  for (int i = 0; i < kCellCount; ++i) {
    if (mask[i]) out.push_back(i);
  }
  return out;
}

struct EpisodePhases {
  int moves = 0;
  int hidden = 0;               // records before the first sighting
  int after_visible = -1;       // moves from first sighting on; -1 if never seen
};

EpisodePhases phases_of(const Trajectory& traj) {
  EpisodePhases ph;
  const int len = static_cast<int>(traj.steps.size());
  ph.moves = traj.success() ? len - 1 : len;
  int first_visible = -1;
  for (int i = 0; i < len; ++i) {
    if (traj.steps[i].target_visible) {
      first_visible = i;
      break;
    }
  }
  ph.hidden = first_visible < 0 ? len : first_visible;
  if (first_visible >= 0) ph.after_visible = ph.moves - first_visible;
  return ph;
}

SummaryStat stat_of(const std::vector<double>& xs) {
  SummaryStat s;
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double sq = 0.0;
    for (double x : xs) sq += (x - s.mean) * (x - s.mean);
    s.variance = sq / static_cast<double>(xs.size() - 1);
  }
  return s;
}

}  // namespace

DistractorMode distractor_mode_from_name(std::string_view name) {
  if (name == "random") return {DistractorMode::Kind::Random, 0};
  const auto colon = name.find(':');
  if (colon != std::string_view::npos) {
    const std::string_view head = name.substr(0, colon);
    const std::string_view tail = name.substr(colon + 1);
    if (tail.size() == 1 && tail[0] >= '1' && tail[0] <= '3') {
      const int k = tail[0] - '0';
      if (head == "ignored") return {DistractorMode::Kind::Ignored, k};
      if (head == "aligned") return {DistractorMode::Kind::Aligned, k};
    }
  }
  throw UsageError("unknown distractor mode '" + std::string(name) +
                   "' (expected random, ignored:K or aligned:K, K in 1..3)");
}

std::string distractor_mode_name(DistractorMode mode) {
  switch (mode.kind) {
    case DistractorMode::Kind::Random:
      return "random";
    case DistractorMode::Kind::Ignored:
      return "ignored:" + std::to_string(mode.k);
    case DistractorMode::Kind::Aligned:
      return "aligned:" + std::to_string(mode.k);
  }
  return "random";
}

std::vector<Trajectory> generate_trajectories(const std::vector<GridMap>& maps,
                                              const PomcpConfig& cfg,
                                              std::uint64_t seed, int per_map,
                                              int max_steps) {
  std::vector<Trajectory> out(maps.size() * static_cast<std::size_t>(per_map));
  const int total = static_cast<int>(out.size());
#pragma omp parallel for schedule(dynamic)
  for (int idx = 0; idx < total; ++idx) {
    const GridMap& map = maps[idx / per_map];
    const int episode = idx % per_map;
    const std::uint64_t ep_seed =
        derive_seed(seed, {hash_str(map.id()), static_cast<std::uint64_t>(episode)});
    Rng rng(ep_seed);
    const std::vector<Position> free = map.free_cells();
    const Position start = free[rng.next_below(free.size())];
    Position target = start;
    while (target == start) target = free[rng.next_below(free.size())];

    PomcpConfig ep_cfg = cfg;
    ep_cfg.seed = rng.next_u64();
    Trajectory traj = generate_trajectory(map, start, target, ep_cfg, max_steps);
    traj.episode = episode;
    out[idx] = std::move(traj);
  }
  return out;
}

DatasetManifest summarize(const std::vector<GridMap>& maps,
                          const std::vector<Trajectory>& trajectories,
                          std::uint64_t seed) {
  DatasetManifest m;
  for (const GridMap& map : maps) m.map_ids.push_back(map.id());
  m.total_behaviours = static_cast<std::int64_t>(trajectories.size());
  m.seed = seed;

  std::vector<double> to_target;
  std::vector<double> hidden;
  std::vector<double> after;
  for (const Trajectory& traj : trajectories) {
    const EpisodePhases ph = phases_of(traj);
    if (traj.success()) {
      to_target.push_back(ph.moves);
    } else {
      ++m.failed_episodes;
    }
    hidden.push_back(ph.hidden);
    if (ph.after_visible >= 0) after.push_back(ph.after_visible);
    m.total_samples += traj.sample_count();
  }
  m.steps_to_target = stat_of(to_target);
  m.steps_hidden = stat_of(hidden);
  m.steps_after_visible = stat_of(after);
  return m;
}

std::optional<ObjectSet> inject_distractors(const GridMap& map,
                                            const Trajectory& traj, int t,
                                            DistractorMode mode,
                                            std::uint64_t seed) {
  if (t < 0 || t >= static_cast<int>(traj.steps.size())) {
    throw UsageError("inject_distractors: step index out of range");
  }
  const Position pos = traj.steps[t].pos;
  const Position target = traj.target;

  CellMask free;
  for (int i = 0; i < kCellCount; ++i) free[i] = map.cell(i) == Cell::Free;
  CellMask base = free;
  base[pos.index()] = false;
  base[target.index()] = false;

  Rng rng(seed);
  std::vector<int> chosen;

  if (mode.kind == DistractorMode::Kind::Random) {
    chosen = draw_distinct(mask_to_cells(base), kDistractorCount, rng);
  } else {
    // The cells the actor would pass through if it headed straight for the
    // target, plus wherever it actually went next: nothing there counts as
    // "ignored", and exactly the in-between path cells count as "aligned".
    CellMask future;
    const PathResult path = shortest_path(map, pos, target);
    for (Position c : path.cells) future[c.index()] = true;
    for (std::size_t j = static_cast<std::size_t>(t) + 1; j < traj.steps.size(); ++j) {
      future[traj.steps[j].pos.index()] = true;
    }

    CellMask special;
    if (mode.kind == DistractorMode::Kind::Ignored) {
      CellMask past_fov;
      for (int j = std::max(0, t - kMaxPastSteps); j < t; ++j) {
        for (Position c : fov_cells(map, traj.steps[j].pos).cells) {
          past_fov[c.index()] = true;
        }
      }
      special = past_fov & base & ~future;
    } else {
      CellMask intermediates;
      for (std::size_t i = 1; i + 1 < path.cells.size(); ++i) {
        intermediates[path.cells[i].index()] = true;
      }
      special = intermediates & base;
    }

    if (static_cast<int>(special.count()) < mode.k) return std::nullopt;
    const CellMask elsewhere =
        mode.kind == DistractorMode::Kind::Ignored
            ? base & ~special
            : base & ~future;  // keep the remaining decoys off the path
    if (static_cast<int>(elsewhere.count()) < kDistractorCount - mode.k) {
      return std::nullopt;
    }
    chosen = draw_distinct(mask_to_cells(special), mode.k, rng);
    const std::vector<int> rest =
        draw_distinct(mask_to_cells(elsewhere), kDistractorCount - mode.k, rng);
    chosen.insert(chosen.end(), rest.begin(), rest.end());
  }

  ObjectSet objects;
  objects.target = target;
  for (int i = 0; i < kDistractorCount; ++i) {
    objects.distractors[i] = Position::from_index(chosen[i]);
  }
  return objects;
}

InputTensor encode(const GridMap& map, const Trajectory& traj, int t,
                   const ObjectSet& objects, std::uint64_t seed) {
  if (t < 0 || t >= static_cast<int>(traj.steps.size())) {
    throw UsageError("encode: step index out of range");
  }
  InputTensor x;

  int counts[kActionCount] = {};
  for (int j = std::max(0, t - kMaxPastSteps); j < t; ++j) {
    ++counts[static_cast<int>(traj.steps[j].action)];
  }
  for (int a = 0; a < kActionCount; ++a) {
    if (counts[a] == 0) continue;
    const float v = static_cast<float>(counts[a]) / kMaxPastSteps;
    for (int cell = 0; cell < kCellCount; ++cell) {
      x.values[cell * kPlaneCount + kPlaneActions + a] = v;
    }
  }

  // Seeded shuffle of object-to-plane assignment: were plane 9 always the
  // target, the input itself would give the answer away.
  std::vector<int> perm = {0, 1, 2, 3};
  Rng rng(seed);
  rng.shuffle(perm);
  for (int slot = 0; slot < kObjectCount; ++slot) {
    const Position p = objects.object(perm[slot]);
    x.at(p.row, p.col, kPlaneObjects + slot) = 1.0f;
  }

  for (int j = 0; j < kMaxPastSteps; ++j) {
    const int step = t - kMaxPastSteps + j;
    if (step < 0) continue;
    const Position p = traj.steps[step].pos;
    x.at(p.row, p.col, kPlanePastPos + j) = 1.0f;
  }

  for (int cell = 0; cell < kCellCount; ++cell) {
    if (map.cell(cell) == Cell::Wall) {
      x.values[cell * kPlaneCount + kPlaneWalls] = 1.0f;
    }
  }
  const Position cur = traj.steps[t].pos;
  x.at(cur.row, cur.col, kPlaneCurrent) = 1.0f;
  return x;
}

Labels label(const Trajectory& traj, int t) {
  if (t < 0 || t + 1 >= static_cast<int>(traj.steps.size())) {
    throw UsageError("label: step needs a successor");
  }
  Labels l;
  l.target = traj.target.index();
  l.next_action = static_cast<int>(traj.steps[t].action);
  l.next_state = traj.steps[t + 1].pos.index();
  l.belief = traj.steps[t].belief_before;
  return l;
}

Dataset build_dataset(const std::vector<GridMap>& maps,
                      const std::vector<Trajectory>& trajectories,
                      DistractorMode mode, std::uint64_t seed,
                      DatasetManifest* manifest) {
  std::unordered_map<std::string, int> map_index;
  Dataset ds;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    map_index[maps[i].id()] = static_cast<int>(i);
    ds.map_ids.push_back(maps[i].id());
  }

  int skipped = 0;
  for (const Trajectory& traj : trajectories) {
    const auto it = map_index.find(traj.map_id);
    if (it == map_index.end()) {
      throw IntegrityError("trajectory references unknown map '" +
                           traj.map_id + "'");
    }
    const GridMap& map = maps[it->second];
    for (int t = 0; t < traj.sample_count(); ++t) {
      const std::uint64_t sample_seed =
          derive_seed(seed, {hash_str(traj.map_id),
                             static_cast<std::uint64_t>(traj.episode),
                             static_cast<std::uint64_t>(t)});
      const auto objects = inject_distractors(map, traj, t, mode,
                                              derive_seed(sample_seed, {0}));
      if (!objects) {
        ++skipped;
        continue;
      }
      const InputTensor x =
          encode(map, traj, t, *objects, derive_seed(sample_seed, {1}));
      const Labels l = label(traj, t);

      ds.inputs.insert(ds.inputs.end(), x.values.begin(), x.values.end());
      ds.label_target.push_back(l.target);
      ds.label_action.push_back(l.next_action);
      ds.label_state.push_back(l.next_state);
      for (int i = 0; i < kCellCount; ++i) {
        ds.label_belief.push_back(static_cast<float>(l.belief.prob(i)));
      }
      ds.info.push_back({it->second, traj.episode, t,
                         traj.steps[t].target_visible, *objects});
    }
  }
  if (manifest) {
    manifest->total_samples = ds.size();
    manifest->skipped_samples = skipped;
  }
  return ds;
}

}  // namespace tomsyn
