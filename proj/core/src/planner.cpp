#include "tomsyn/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "tomsyn/error.hpp"
#include "tomsyn/random.hpp"

namespace tomsyn {
namespace {

// Observation after landing on a cell: the target's cell if it entered the
// field of view, otherwise "nothing seen".
constexpr int kObsNotSeen = 0;

int observe(Position pos, int target_cell) {
  return chebyshev(pos, Position::from_index(target_cell)) <= kFovRadius
             ? 1 + target_cell
             : kObsNotSeen;
}

struct ActionEdge {
  int visits = 0;
  double total_value = 0.0;
  // Children keyed by observation id; a handful of entries in practice, so
  // a linear scan beats a hash map here.
  std::vector<std::pair<int, int>> children;
};

struct SearchNode {
  int visits = 0;
  std::array<ActionEdge, kActionCount> edges;
};

class Search {
 public:
  Search(const GridMap& map, const PomcpConfig& cfg)
      : map_(map), cfg_(cfg), rng_(cfg.seed) {
    nodes_.reserve(static_cast<std::size_t>(cfg.max_samples) * 2 + 1);
    nodes_.emplace_back();
    nodes_[0].visits = 1;  // root is pre-expanded; simulations descend it
  }

  Action run(Position pos, const BeliefState& belief) {
    for (int i = 0; i < cfg_.max_samples; ++i) {
      const int target = sample_cell(belief, rng_);
      simulate(0, pos, target, 0);
    }
    // Highest mean value wins; untried actions never win; first action in
    // canonical order keeps ties deterministic.
    int best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < kActionCount; ++a) {
      const ActionEdge& e = nodes_[0].edges[a];
      if (e.visits == 0) continue;
      const double mean = e.total_value / e.visits;
      if (mean > best_value) {
        best_value = mean;
        best = a;
      }
    }
    return static_cast<Action>(best);
  }

 private:
  double simulate(int node_idx, Position pos, int target, int depth) {
    if (depth >= cfg_.rollout_depth) return 0.0;
    if (nodes_[node_idx].visits == 0) {
      nodes_[node_idx].visits = 1;
      return rollout(pos, target);
    }

    const int a = select_ucb(node_idx);
    const Position next = apply_action(map_, pos, static_cast<Action>(a));
    const bool arrived = next.index() == target;
    double value = cfg_.step_cost + (arrived ? cfg_.reward_target : 0.0);
    if (!arrived) {
      const int child = child_for(node_idx, a, observe(next, target));
      value += cfg_.discount * simulate(child, next, target, depth + 1);
    }

    SearchNode& node = nodes_[node_idx];
    node.visits += 1;
    node.edges[a].visits += 1;
    node.edges[a].total_value += value;
    return value;
  }

  // Random playout of rollout_depth steps from a freshly expanded leaf.
  double rollout(Position pos, int target) {
    double value = 0.0;
    double disc = 1.0;
    for (int d = 0; d < cfg_.rollout_depth; ++d) {
      const Action a = random_unblocked_action(pos);
      pos = apply_action(map_, pos, a);
      const bool arrived = pos.index() == target;
      value += disc * (cfg_.step_cost + (arrived ? cfg_.reward_target : 0.0));
      if (arrived) break;
      disc *= cfg_.discount;
    }
    return value;
  }

  Action random_unblocked_action(Position pos) {
    std::array<Action, kActionCount> open;
    int n = 0;
    for (int a = 0; a < kActionCount; ++a) {
      const Action act = static_cast<Action>(a);
      if (act == Action::Stay || apply_action(map_, pos, act) != pos) {
        open[n++] = act;
      }
    }
    return open[rng_.next_below(static_cast<std::uint64_t>(n))];
  }

  int select_ucb(int node_idx) {
    const SearchNode& node = nodes_[node_idx];
    const double log_n = std::log(static_cast<double>(node.visits));
    int best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < kActionCount; ++a) {
      const ActionEdge& e = node.edges[a];
      if (e.visits == 0) return a;  // try every action once, in order
      const double score =
          e.total_value / e.visits + cfg_.ucb_c * std::sqrt(log_n / e.visits);
      if (score > best_score) {
        best_score = score;
        best = a;
      }
    }
    return best;
  }

  int child_for(int node_idx, int action, int obs) {
    for (const auto& [o, idx] : nodes_[node_idx].edges[action].children) {
      if (o == obs) return idx;
    }
    nodes_.emplace_back();
    const int idx = static_cast<int>(nodes_.size()) - 1;
    nodes_[node_idx].edges[action].children.emplace_back(obs, idx);
    return idx;
  }

  const GridMap& map_;
  const PomcpConfig& cfg_;
  Rng rng_;
  std::vector<SearchNode> nodes_;
};

}  // namespace

Action plan_action(const GridMap& map, Position pos, const BeliefState& b,
                   const PomcpConfig& cfg) {
  if (cfg.max_samples < 1 || cfg.rollout_depth < 1 || cfg.discount <= 0.0 ||
      cfg.discount >= 1.0) {
    throw UsageError("plan_action: invalid planner configuration");
  }
  Search search(map, cfg);
  return search.run(pos, b);
}

Trajectory generate_trajectory(const GridMap& map, Position start,
                               Position target, const PomcpConfig& cfg,
                               int max_steps) {
  if (!map.is_free(start) || !map.is_free(target) || start == target) {
    throw UsageError("generate_trajectory: start/target must be distinct "
                     "free cells");
  }

  Trajectory traj;
  traj.map_id = map.id();
  traj.target = target;

  Position pos = start;
  BeliefState belief = init_belief(map, start);
  for (int moves = 0;; ++moves) {
    const FieldOfView fov = fov_cells(map, pos);
    const bool visible = fov.contains(target);
    belief = update_belief(belief, fov,
                           visible ? std::optional<Position>(target)
                                   : std::nullopt);
    if (pos == target) {
      traj.steps.push_back({pos, Action::Stay, belief, visible});
      break;
    }
    if (moves == max_steps) break;

    PomcpConfig step_cfg = cfg;
    step_cfg.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(moves)});
    const Action a = plan_action(map, pos, belief, step_cfg);
    traj.steps.push_back({pos, a, belief, visible});
    pos = apply_action(map, pos, a);
  }
  return traj;
}

}  // namespace tomsyn
