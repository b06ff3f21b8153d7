#pragma once

// Independent reference implementations the tests compare the library
// against. Everything here is deliberately written in the most obvious way
// possible (plain loops, no shared code with core/) so that agreement
// between the two is meaningful.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "tomsyn/belief.hpp"
#include "tomsyn/gridworld.hpp"
#include "tomsyn/planner.hpp"

namespace tomsyn::testing {

// Number of free cells reachable from `start` under the 8 move directions,
// via an explicit-stack flood fill.
int flood_fill_count(const GridMap& map, Position start);

// Plain queue BFS over the 9-action move set; -1 when unreachable.
int bfs_distance(const GridMap& map, Position a, Position b);

// One observation of a trajectory replay: where the viewer stood and where
// (if anywhere) the target showed inside the 5x5 window.
struct Observation {
  Position viewer;
  std::optional<Position> seen_at;
};

// Posterior over the target cell by brute force: enumerate every free cell
// except `start` as a candidate target, drop the candidates inconsistent
// with any observation, and spread the mass uniformly over the survivors.
// A candidate is inconsistent when it sits inside some viewer's window
// without being the reported sighting, or when a sighting names a
// different cell.
std::vector<double> enumeration_posterior(const GridMap& map, Position start,
                                          const std::vector<Observation>& obs);

// Optimal values/actions of the known-target search problem the planner
// simulates: each move costs cfg.step_cost, arriving adds cfg.reward_target
// and ends the episode, blocked moves stay in place, future values decay by
// cfg.discount. Solved by value iteration to 1e-12.
struct PlanOracle {
  std::array<double, kCellCount> value{};
  std::array<int, kCellCount> best_action{};  // canonical-order argmax
};
PlanOracle value_iteration(const GridMap& map, Position target,
                           const PomcpConfig& cfg);

// Central finite difference of a scalar function at x with step h.
double central_difference(const std::function<double(double)>& f, double x,
                          double h);

// max over i of |a_i - b_i| / max(1, |a_i|, |b_i|).
double max_rel_error(const std::vector<double>& a,
                     const std::vector<double>& b);

// Student-t CDF by adaptive Simpson integration of the density (no shared
// code with the stats module), accurate to ~1e-10.
double t_cdf_numeric(double t, double nu);

// Two-tailed Welch p-value built on t_cdf_numeric.
double welch_p_numeric(const std::vector<double>& a,
                       const std::vector<double>& b);

// Cross-entropy and KL divergence by direct long-double summation over an
// explicitly materialized softmax.
double ce_direct(const std::vector<double>& logits, int label);
double kl_direct(const std::vector<double>& p,
                 const std::vector<double>& logits);

// Shannon entropy by direct summation.
double entropy_direct(const std::vector<double>& p);

// 3x3 same-padding convolution of channels-last images by quintuple loop.
// x: [n,h,w,cin], w: [3*3*cin, cout] indexed by ((kr*3+kc)*cin+ci)*cout+co,
// b: [cout], y: [n,h,w,cout].
void conv3x3_reference(const std::vector<double>& x,
                       const std::vector<double>& w,
                       const std::vector<double>& b, std::vector<double>& y,
                       int n, int h, int wd, int cin, int cout);

// Random connected map whose free cells all lie inside the `side` x `side`
// top-left corner (everything else walled), for small-world brute-force
// comparisons. Retries until connected with >= 4 free cells.
GridMap random_corner_map(std::uint64_t seed, int side, double density);

}  // namespace tomsyn::testing
