#pragma once

#include <string>
#include <vector>

#include "tomsyn/belief.hpp"
#include "tomsyn/gridworld.hpp"

namespace tomsyn {

// Knobs of the Monte-Carlo tree search. max_samples is the "cognitive
// capability" of the actor: simulations spent per decision.
struct PomcpConfig {
  int max_samples = 250;
  double ucb_c = 5.0;
  double discount = 0.95;
  int rollout_depth = 20;
  double reward_target = 10.0;
  double step_cost = -1.0;
  std::uint64_t seed = 0;
};

// One tick of an episode. `belief_before` is the posterior after observing
// from `pos` but before acting; `action` is what the actor then did. The
// final step of a successful episode is recorded with action = Stay.
struct TrajectoryStep {
  Position pos;
  Action action = Action::Stay;
  BeliefState belief_before;
  bool target_visible = false;
};

struct Trajectory {
  std::string map_id;
  int episode = 0;
  Position target;
  std::vector<TrajectoryStep> steps;

  bool success() const {
    return !steps.empty() && steps.back().pos == target;
  }
  // Steps usable as supervised samples: all but the last (which has no
  // successor to label next action / next state from).
  int sample_count() const {
    return steps.size() > 1 ? static_cast<int>(steps.size()) - 1 : 0;
  }
};

// One decision: runs exactly cfg.max_samples simulations, each of which
// samples a target cell from the belief, walks the tree by UCB1, expands a
// leaf and evaluates it with a random rollout. Returns the root action with
// the highest mean value (ties broken by action order). Deterministic in
// (map, pos, b, cfg).
Action plan_action(const GridMap& map, Position pos, const BeliefState& b,
                   const PomcpConfig& cfg);

// Full observe -> plan -> act loop from `start` until the target is reached
// or `max_steps` moves were spent. Failures are recorded, not raised.
Trajectory generate_trajectory(const GridMap& map, Position start,
                               Position target, const PomcpConfig& cfg,
                               int max_steps = 40);

}  // namespace tomsyn
