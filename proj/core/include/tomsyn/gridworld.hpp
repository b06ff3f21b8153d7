#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tomsyn {

inline constexpr int kGridSize = 11;
inline constexpr int kCellCount = kGridSize * kGridSize;

struct Position {
  int row = 0;
  int col = 0;

  constexpr int index() const { return row * kGridSize + col; }
  constexpr bool in_bounds() const {
    return row >= 0 && row < kGridSize && col >= 0 && col < kGridSize;
  }
  static constexpr Position from_index(int idx) {
    return {idx / kGridSize, idx % kGridSize};
  }
  friend constexpr auto operator<=>(const Position&, const Position&) = default;
};

// Chebyshev distance; one diagonal-capable move covers one unit.
constexpr int chebyshev(Position a, Position b) {
  int dr = a.row > b.row ? a.row - b.row : b.row - a.row;
  int dc = a.col > b.col ? a.col - b.col : b.col - a.col;
  return dr > dc ? dr : dc;
}

// Canonical action order. This order is also the deterministic tie-break
// everywhere an argmax over actions is taken.
enum class Action : std::uint8_t {
  North = 0,
  East = 1,
  South = 2,
  West = 3,
  NorthEast = 4,
  NorthWest = 5,
  SouthEast = 6,
  SouthWest = 7,
  Stay = 8,
};
inline constexpr int kActionCount = 9;

struct ActionDelta {
  int dr;
  int dc;
};

// North decreases the row index.
constexpr ActionDelta action_delta(Action a) {
  constexpr ActionDelta deltas[kActionCount] = {
      {-1, 0}, {0, 1}, {1, 0}, {0, -1}, {-1, 1}, {-1, -1}, {1, 1}, {1, -1}, {0, 0},
  };
  return deltas[static_cast<int>(a)];
}

constexpr Action inverse(Action a) {
  constexpr Action inv[kActionCount] = {
      Action::South,     Action::West,      Action::North,
      Action::East,      Action::SouthWest, Action::SouthEast,
      Action::NorthWest, Action::NorthEast, Action::Stay,
  };
  return inv[static_cast<int>(a)];
}

std::string_view action_name(Action a);
Action action_from_name(std::string_view name);

enum class Cell : std::uint8_t { Free = 0, Wall = 1 };

// 11x11 occupancy grid. Maps produced by generate_map or parsed from the
// text format always satisfy: every Free cell reachable from every other
// under the 8 move directions, and at least 30 Free cells.
class GridMap {
 public:
  GridMap() { cells_.fill(Cell::Free); }
  GridMap(std::array<Cell, kCellCount> cells, std::string id, std::uint64_t seed)
      : cells_(cells), id_(std::move(id)), seed_(seed) {}

  Cell cell(Position p) const { return cells_[p.index()]; }
  Cell cell(int idx) const { return cells_[idx]; }
  bool is_free(Position p) const {
    return p.in_bounds() && cells_[p.index()] == Cell::Free;
  }
  const std::string& id() const { return id_; }
  std::uint64_t seed() const { return seed_; }

  int free_count() const;
  std::vector<Position> free_cells() const;
  bool connected() const;

  friend bool operator==(const GridMap& a, const GridMap& b) {
    return a.cells_ == b.cells_ && a.id_ == b.id_ && a.seed_ == b.seed_;
  }

 private:
  std::array<Cell, kCellCount> cells_;
  std::string id_;
  std::uint64_t seed_ = 0;
};

struct MapGenParams {
  double wall_density = 0.12;  // Bernoulli wall probability, valid in [0, 0.35]
  int column_count = 5;        // 1x1 or 1x2 pillars dropped before the walls
  bool border = false;         // close the outer ring
  int max_retries = 1000;
};

// Deterministic: identical (seed, params) always yields the identical map.
// Throws NumericalError if no connected map with >= 30 free cells is found
// within max_retries attempts.
GridMap generate_map(std::uint64_t seed, const MapGenParams& params,
                     std::string id = {});

// Blocked moves (wall or out of bounds) are no-ops: the result is `pos`.
Position apply_action(const GridMap& map, Position pos, Action a);

// The 5x5 window centered on the viewer, clipped at the borders. Walls do
// not occlude; wall cells are members of the window like any other.
inline constexpr int kFovRadius = 2;

struct FieldOfView {
  Position center;
  std::vector<Position> cells;  // row-major order

  bool contains(Position p) const {
    return p.in_bounds() && chebyshev(center, p) <= kFovRadius;
  }
};

FieldOfView fov_cells(const GridMap& map, Position pos);

struct PathResult {
  int length = 0;
  std::vector<Position> cells;
};

// Minimal move count between two free cells, path included. Neighbor
// expansion follows the canonical action order, which fixes the returned
// path among equals. Throws IntegrityError when b is unreachable from a.
PathResult shortest_path(const GridMap& map, Position a, Position b);

// Text format, bit-exact round-trip:
//   map <id> seed=<n>\n
//   11 rows of 11 chars, '#' wall and '.' free, each '\n'-terminated.
std::string map_to_text(const GridMap& map);
GridMap map_from_text(std::string_view text);

}  // namespace tomsyn
