#include "tomsyn/belief.hpp"

#include <cmath>

#include "tomsyn/error.hpp"
#include "tomsyn/random.hpp"

namespace tomsyn {

BeliefState BeliefState::delta(Position at) {
  BeliefState b;
  b.p_[at.index()] = 1.0;
  return b;
}

bool BeliefState::valid(const GridMap& map, double tol) const {
  double sum = 0.0;
  for (int i = 0; i < kCellCount; ++i) {
    if (p_[i] < 0.0) return false;
    if (p_[i] > 0.0 && map.cell(i) == Cell::Wall) return false;
    sum += p_[i];
  }
  return std::abs(sum - 1.0) <= tol;
}

BeliefState init_belief(const GridMap& map, Position actor_start) {
  int candidates = 0;
  for (int i = 0; i < kCellCount; ++i) {
    if (map.cell(i) == Cell::Free && i != actor_start.index()) ++candidates;
  }
  if (candidates == 0) {
    throw NumericalError("init_belief: no candidate cells for the target");
  }
  BeliefState b;
  const double mass = 1.0 / candidates;
  for (int i = 0; i < kCellCount; ++i) {
    if (map.cell(i) == Cell::Free && i != actor_start.index()) {
      b.mutable_prob(i) = mass;
    }
  }
  return b;
}

BeliefState update_belief(const BeliefState& b, const FieldOfView& fov,
                          std::optional<Position> target_seen_at) {
  if (target_seen_at) {
    if (!fov.contains(*target_seen_at)) {
      throw NumericalError("update_belief: sighting outside the field of view");
    }
    return BeliefState::delta(*target_seen_at);
  }
  BeliefState out = b;
  for (Position cell : fov.cells) {
    out.mutable_prob(cell.index()) = 0.0;
  }
  double remaining = 0.0;
  for (int i = 0; i < kCellCount; ++i) remaining += out.prob(i);
  if (remaining <= 0.0) {
    throw NumericalError(
        "update_belief: no-sighting update left zero mass; belief and "
        "observations are inconsistent");
  }
  for (int i = 0; i < kCellCount; ++i) out.mutable_prob(i) /= remaining;
  return out;
}

double belief_entropy(const BeliefState& b) {
  double h = 0.0;
  for (int i = 0; i < kCellCount; ++i) {
    const double p = b.prob(i);
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

int sample_cell(const BeliefState& b, Rng& rng) {
  const double u = rng.next_double();
  double acc = 0.0;
  int last_positive = -1;
  for (int i = 0; i < kCellCount; ++i) {
    const double p = b.prob(i);
    if (p <= 0.0) continue;
    last_positive = i;
    acc += p;
    if (u < acc) return i;
  }
  // Floating-point round-off can leave acc fractionally below 1.
  if (last_positive < 0) {
    throw NumericalError("sample_cell: belief has no mass");
  }
  return last_positive;
}

}  // namespace tomsyn
