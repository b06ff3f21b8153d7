#pragma once

#include <array>
#include <optional>

#include "tomsyn/gridworld.hpp"

namespace tomsyn {
class Rng;

// Exact posterior over the hidden target cell, one probability per grid
// cell in row-major order. Mass lives only on free cells and sums to 1.
class BeliefState {
 public:
  BeliefState() { p_.fill(0.0); }

  double prob(int cell) const { return p_[cell]; }
  double prob(Position p) const { return p_[p.index()]; }
  double& mutable_prob(int cell) { return p_[cell]; }
  const std::array<double, kCellCount>& probs() const { return p_; }

  static BeliefState delta(Position at);

  // sum == 1 within tol, no negatives, no mass on walls
  bool valid(const GridMap& map, double tol = 1e-9) const;

  friend bool operator==(const BeliefState&, const BeliefState&) = default;

 private:
  std::array<double, kCellCount> p_;
};

// Uniform over every free cell except the actor's own start cell.
BeliefState init_belief(const GridMap& map, Position actor_start);

// Seen: collapse to a delta at the sighted cell. Not seen: zero out the
// whole window and renormalize what is left. Throws NumericalError if the
// update would leave zero mass, which cannot happen in a consistent world.
BeliefState update_belief(const BeliefState& b, const FieldOfView& fov,
                          std::optional<Position> target_seen_at);

// Shannon entropy in nats; 0 exactly when the belief is a delta.
double belief_entropy(const BeliefState& b);

// Draw a cell proportionally to its mass.
int sample_cell(const BeliefState& b, Rng& rng);

}  // namespace tomsyn
