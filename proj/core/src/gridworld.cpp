#include "tomsyn/gridworld.hpp"

#include <algorithm>
#include <charconv>
#include <deque>

#include "tomsyn/error.hpp"
#include "tomsyn/random.hpp"

namespace tomsyn {

namespace {

constexpr std::string_view kActionNames[kActionCount] = {
    "N", "E", "S", "W", "NE", "NW", "SE", "SW", "STAY"};

}  // namespace

std::string_view action_name(Action a) {
  return kActionNames[static_cast<int>(a)];
}

Action action_from_name(std::string_view name) {
  for (int i = 0; i < kActionCount; ++i) {
    if (kActionNames[i] == name) return static_cast<Action>(i);
  }
  throw IntegrityError("unknown action name: " + std::string(name));
}

int GridMap::free_count() const {
  return static_cast<int>(
      std::count(cells_.begin(), cells_.end(), Cell::Free));
}

std::vector<Position> GridMap::free_cells() const {
  std::vector<Position> out;
  out.reserve(kCellCount);
  for (int i = 0; i < kCellCount; ++i) {
    if (cells_[i] == Cell::Free) out.push_back(Position::from_index(i));
  }
  return out;
}

bool GridMap::connected() const {
  int start = -1;
  for (int i = 0; i < kCellCount; ++i) {
    if (cells_[i] == Cell::Free) {
      start = i;
      break;
    }
  }
  if (start < 0) return false;

  std::array<bool, kCellCount> seen{};
  std::deque<int> queue{start};
  seen[start] = true;
  int reached = 0;
  while (!queue.empty()) {
    Position p = Position::from_index(queue.front());
    queue.pop_front();
    ++reached;
    for (int a = 0; a < kActionCount - 1; ++a) {  // Stay expands nothing
      auto d = action_delta(static_cast<Action>(a));
      Position q{p.row + d.dr, p.col + d.dc};
      if (!q.in_bounds() || cells_[q.index()] == Cell::Wall) continue;
      if (!seen[q.index()]) {
        seen[q.index()] = true;
        queue.push_back(q.index());
      }
    }
  }
  return reached == free_count();
}

GridMap generate_map(std::uint64_t seed, const MapGenParams& params,
                     std::string id) {
  Rng rng(mix64(seed));
  for (int attempt = 0; attempt < params.max_retries; ++attempt) {
    std::array<Cell, kCellCount> cells;
    cells.fill(Cell::Free);

    if (params.border) {
      for (int i = 0; i < kGridSize; ++i) {
        cells[Position{0, i}.index()] = Cell::Wall;
        cells[Position{kGridSize - 1, i}.index()] = Cell::Wall;
        cells[Position{i, 0}.index()] = Cell::Wall;
        cells[Position{i, kGridSize - 1}.index()] = Cell::Wall;
      }
    }

    // Pillars: 1x1 or 1x2, random orientation, anywhere in bounds.
    for (int k = 0; k < params.column_count; ++k) {
      int r = rng.next_int(0, kGridSize - 1);
      int c = rng.next_int(0, kGridSize - 1);
      cells[Position{r, c}.index()] = Cell::Wall;
      if (rng.next_bool(0.5)) {
        bool vertical = rng.next_bool(0.5);
        Position second{r + (vertical ? 1 : 0), c + (vertical ? 0 : 1)};
        if (second.in_bounds()) cells[second.index()] = Cell::Wall;
      }
    }

    for (int i = 0; i < kCellCount; ++i) {
      if (cells[i] == Cell::Free && rng.next_bool(params.wall_density)) {
        cells[i] = Cell::Wall;
      }
    }

    GridMap map(cells, id, seed);
    if (map.free_count() >= 30 && map.connected()) return map;
  }
  throw NumericalError("map generation failed: no connected layout within " +
                       std::to_string(params.max_retries) + " retries");
}

Position apply_action(const GridMap& map, Position pos, Action a) {
  auto d = action_delta(a);
  Position next{pos.row + d.dr, pos.col + d.dc};
  return map.is_free(next) ? next : pos;
}

FieldOfView fov_cells(const GridMap& map, Position pos) {
  (void)map;  // walls stay inside the window, so only bounds matter
  FieldOfView fov;
  fov.center = pos;
  for (int r = pos.row - 2; r <= pos.row + 2; ++r) {
    for (int c = pos.col - 2; c <= pos.col + 2; ++c) {
      Position p{r, c};
      if (p.in_bounds()) fov.cells.push_back(p);
    }
  }
  return fov;
}

PathResult shortest_path(const GridMap& map, Position a, Position b) {
  if (!map.is_free(a) || !map.is_free(b)) {
    throw IntegrityError("shortest_path endpoints must be free cells");
  }
  if (a == b) return {0, {a}};

  std::array<int, kCellCount> parent;
  parent.fill(-2);  // -2 unvisited, -1 source
  parent[a.index()] = -1;
  std::deque<int> queue{a.index()};
  while (!queue.empty()) {
    Position p = Position::from_index(queue.front());
    queue.pop_front();
    for (int ai = 0; ai < kActionCount - 1; ++ai) {
      auto d = action_delta(static_cast<Action>(ai));
      Position q{p.row + d.dr, p.col + d.dc};
      if (!map.is_free(q) || parent[q.index()] != -2) continue;
      parent[q.index()] = p.index();
      if (q == b) {
        std::vector<Position> cells{b};
        for (int cur = p.index(); cur != -1; cur = parent[cur]) {
          cells.push_back(Position::from_index(cur));
        }
        std::reverse(cells.begin(), cells.end());
        return {static_cast<int>(cells.size()) - 1, std::move(cells)};
      }
      queue.push_back(q.index());
    }
  }
  throw IntegrityError("shortest_path: target unreachable, map is corrupt");
}

std::string map_to_text(const GridMap& map) {
  std::string out = "map " + map.id() + " seed=" + std::to_string(map.seed()) + "\n";
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) {
      out += map.cell(Position{r, c}) == Cell::Wall ? '#' : '.';
    }
    out += '\n';
  }
  return out;
}

GridMap map_from_text(std::string_view text) {
  auto fail = [](std::string_view why) -> GridMap {
    throw IntegrityError("bad map file: " + std::string(why));
  };

  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) return fail("missing final newline");
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  if (start != text.size()) return fail("trailing bytes");
  if (lines.size() != 1 + kGridSize) return fail("expected 12 lines");

  std::string_view header = lines[0];
  if (!header.starts_with("map ")) return fail("missing 'map' header");
  header.remove_prefix(4);
  std::size_t sp = header.find(' ');
  if (sp == std::string_view::npos) return fail("missing id/seed separator");
  std::string id(header.substr(0, sp));
  std::string_view seed_part = header.substr(sp + 1);
  if (!seed_part.starts_with("seed=")) return fail("missing seed field");
  seed_part.remove_prefix(5);
  std::uint64_t seed = 0;
  auto [ptr, ec] =
      std::from_chars(seed_part.data(), seed_part.data() + seed_part.size(), seed);
  if (ec != std::errc{} || ptr != seed_part.data() + seed_part.size()) {
    return fail("unparseable seed");
  }

  std::array<Cell, kCellCount> cells;
  for (int r = 0; r < kGridSize; ++r) {
    std::string_view row = lines[1 + r];
    if (row.size() != kGridSize) return fail("row width != 11");
    for (int c = 0; c < kGridSize; ++c) {
      if (row[c] == '#') {
        cells[Position{r, c}.index()] = Cell::Wall;
      } else if (row[c] == '.') {
        cells[Position{r, c}.index()] = Cell::Free;
      } else {
        return fail("unexpected cell character");
      }
    }
  }

  GridMap map(cells, id, seed);
  if (map.free_count() < 30 || !map.connected()) {
    return fail("map violates connectivity invariants");
  }
  return map;
}

}  // namespace tomsyn
