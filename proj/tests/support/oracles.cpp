#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <stdexcept>

namespace tomsyn::testing {

int flood_fill_count(const GridMap& map, Position start) {
  if (!map.is_free(start)) return 0;
  std::array<bool, kCellCount> seen{};
  std::vector<Position> stack{start};
  seen[start.index()] = true;
  int count = 0;
  while (!stack.empty()) {
    const Position p = stack.back();
    stack.pop_back();
    ++count;
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        const Position q{p.row + dr, p.col + dc};
        if (q.in_bounds() && map.is_free(q) && !seen[q.index()]) {
          seen[q.index()] = true;
          stack.push_back(q);
        }
      }
    }
  }
  return count;
}

int bfs_distance(const GridMap& map, Position a, Position b) {
  if (!map.is_free(a) || !map.is_free(b)) return -1;
  std::array<int, kCellCount> dist;
  dist.fill(-1);
  dist[a.index()] = 0;
  std::deque<Position> queue{a};
  while (!queue.empty()) {
    const Position p = queue.front();
    queue.pop_front();
    if (p == b) return dist[p.index()];
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        const Position q{p.row + dr, p.col + dc};
        if (q.in_bounds() && map.is_free(q) && dist[q.index()] < 0) {
          dist[q.index()] = dist[p.index()] + 1;
          queue.push_back(q);
        }
      }
    }
  }
  return -1;
}

std::vector<double> enumeration_posterior(
    const GridMap& map, Position start, const std::vector<Observation>& obs) {
  auto in_window = [](Position viewer, Position cell) {
    const int dr = std::abs(viewer.row - cell.row);
    const int dc = std::abs(viewer.col - cell.col);
    return dr <= 2 && dc <= 2;
  };
  std::vector<double> posterior(kCellCount, 0.0);
  std::vector<int> survivors;
  for (int idx = 0; idx < kCellCount; ++idx) {
    const Position cand = Position::from_index(idx);
    if (!map.is_free(cand) || cand == start) continue;
    bool consistent = true;
    for (const Observation& o : obs) {
      if (o.seen_at.has_value()) {
        if (cand != *o.seen_at) {
          consistent = false;
          break;
        }
      } else if (in_window(o.viewer, cand)) {
        consistent = false;
        break;
      }
    }
    if (consistent) survivors.push_back(idx);
  }
  if (survivors.empty()) {
    throw std::runtime_error("no placement consistent with the history");
  }
  for (int idx : survivors) {
    posterior[idx] = 1.0 / static_cast<double>(survivors.size());
  }
  return posterior;
}

PlanOracle value_iteration(const GridMap& map, Position target,
                           const PomcpConfig& cfg) {
  PlanOracle oracle;
  oracle.best_action.fill(-1);
  std::array<double, kCellCount> v{};
  for (int sweep = 0; sweep < 100000; ++sweep) {
    double delta = 0.0;
    for (int idx = 0; idx < kCellCount; ++idx) {
      const Position pos = Position::from_index(idx);
      if (!map.is_free(pos) || pos == target) continue;
      double best = -1e300;
      for (int a = 0; a < kActionCount; ++a) {
        const Position next = apply_action(map, pos, static_cast<Action>(a));
        double q = cfg.step_cost;
        if (next == target) {
          q += cfg.reward_target;
        } else {
          q += cfg.discount * v[next.index()];
        }
        best = std::max(best, q);
      }
      delta = std::max(delta, std::abs(best - v[idx]));
      v[idx] = best;
    }
    if (delta < 1e-12) break;
  }
  for (int idx = 0; idx < kCellCount; ++idx) {
    const Position pos = Position::from_index(idx);
    if (!map.is_free(pos) || pos == target) continue;
    double best = -1e300;
    int best_a = -1;
    for (int a = 0; a < kActionCount; ++a) {
      const Position next = apply_action(map, pos, static_cast<Action>(a));
      double q = cfg.step_cost;
      if (next == target) {
        q += cfg.reward_target;
      } else {
        q += cfg.discount * v[next.index()];
      }
      if (q > best + 1e-12) {
        best = q;
        best_a = a;
      }
    }
    oracle.value[idx] = best;
    oracle.best_action[idx] = best_a;
  }
  return oracle;
}

double central_difference(const std::function<double(double)>& f, double x,
                          double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

double max_rel_error(const std::vector<double>& a,
                     const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({1.0, std::abs(a[i]), std::abs(b[i])});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

namespace {

double t_density(double x, double nu) {
  const double log_norm = std::lgamma((nu + 1.0) / 2.0) -
                          std::lgamma(nu / 2.0) -
                          0.5 * std::log(nu * std::acos(-1.0));
  return std::exp(log_norm - (nu + 1.0) / 2.0 * std::log1p(x * x / nu));
}

double simpson(double a, double b, double fa, double fm, double fb, double nu,
               double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = t_density(lm, nu);
  const double frm = t_density(rm, nu);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return simpson(a, m, fa, flm, fm, nu, tol / 2.0, depth - 1) +
         simpson(m, b, fm, frm, fb, nu, tol / 2.0, depth - 1);
}

double integrate_density(double a, double b, double nu) {
  const double fa = t_density(a, nu);
  const double fb = t_density(b, nu);
  const double fm = t_density(0.5 * (a + b), nu);
  return simpson(a, b, fa, fm, fb, nu, 1e-12, 40);
}

}  // namespace

double t_cdf_numeric(double t, double nu) {
  if (t < 0.0) return 1.0 - t_cdf_numeric(-t, nu);
  // Split at the point where the tail becomes negligible; the density decays
  // polynomially, so integrate far enough out for 1e-10 accuracy.
  const double far = std::max(60.0, 40.0 * std::sqrt(nu));
  if (t >= far) return 1.0;
  return 0.5 + integrate_density(0.0, t, nu);
}

double welch_p_numeric(const std::vector<double>& a,
                       const std::vector<double>& b) {
  const auto mean = [](const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
  };
  const auto var = [&](const std::vector<double>& xs) {
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size() - 1);
  };
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = var(a) / na;
  const double vb = var(b) / nb;
  if (va + vb == 0.0) return mean(a) == mean(b) ? 1.0 : 0.0;
  const double t = (mean(a) - mean(b)) / std::sqrt(va + vb);
  const double nu = (va + vb) * (va + vb) /
                    (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  return 2.0 * (1.0 - t_cdf_numeric(std::abs(t), nu));
}

double ce_direct(const std::vector<double>& logits, int label) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  long double z = 0.0L;
  for (double l : logits) z += std::exp(static_cast<long double>(l - mx));
  const long double log_p = logits[label] - mx - std::log(z);
  return static_cast<double>(-log_p);
}

double kl_direct(const std::vector<double>& p,
                 const std::vector<double>& logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  long double z = 0.0L;
  for (double l : logits) z += std::exp(static_cast<long double>(l - mx));
  const long double log_z = std::log(z);
  long double kl = 0.0L;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    const long double log_q = logits[i] - mx - log_z;
    kl += static_cast<long double>(p[i]) *
          (std::log(static_cast<long double>(p[i])) - log_q);
  }
  return static_cast<double>(kl);
}

double entropy_direct(const std::vector<double>& p) {
  long double h = 0.0L;
  for (double x : p) {
    if (x > 0.0) h -= static_cast<long double>(x) * std::log(static_cast<long double>(x));
  }
  return static_cast<double>(h);
}

void conv3x3_reference(const std::vector<double>& x,
                       const std::vector<double>& w,
                       const std::vector<double>& b, std::vector<double>& y,
                       int n, int h, int wd, int cin, int cout) {
  y.assign(static_cast<std::size_t>(n) * h * wd * cout, 0.0);
  for (int img = 0; img < n; ++img) {
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < wd; ++c) {
        for (int co = 0; co < cout; ++co) {
          double acc = b[co];
          for (int kr = 0; kr < 3; ++kr) {
            for (int kc = 0; kc < 3; ++kc) {
              const int sr = r + kr - 1;
              const int sc = c + kc - 1;
              if (sr < 0 || sr >= h || sc < 0 || sc >= wd) continue;
              for (int ci = 0; ci < cin; ++ci) {
                const double xv =
                    x[((static_cast<std::size_t>(img) * h + sr) * wd + sc) *
                          cin +
                      ci];
                const double wv =
                    w[((static_cast<std::size_t>(kr) * 3 + kc) * cin + ci) *
                          cout +
                      co];
                acc += xv * wv;
              }
            }
          }
          y[((static_cast<std::size_t>(img) * h + r) * wd + c) * cout + co] =
              acc;
        }
      }
    }
  }
}

GridMap random_corner_map(std::uint64_t seed, int side, double density) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::array<Cell, kCellCount> cells;
    cells.fill(Cell::Wall);
    for (int r = 0; r < side; ++r) {
      for (int c = 0; c < side; ++c) {
        cells[r * kGridSize + c] =
            coin(rng) < density ? Cell::Wall : Cell::Free;
      }
    }
    GridMap map(cells, "corner", seed);
    Position first{-1, -1};
    int free = 0;
    for (int idx = 0; idx < kCellCount; ++idx) {
      if (map.cell(idx) == Cell::Free) {
        if (first.row < 0) first = Position::from_index(idx);
        ++free;
      }
    }
    if (free >= 4 && flood_fill_count(map, first) == free) return map;
  }
  throw std::runtime_error("no connected corner map found");
}

}  // namespace tomsyn::testing
