#include <benchmark/benchmark.h>

#include "tomsyn/belief.hpp"
#include "tomsyn/gridworld.hpp"
#include "tomsyn/planner.hpp"
#include "tomsyn/random.hpp"

namespace {

using namespace tomsyn;

void BM_GenerateMap(benchmark::State& state) {
  std::uint64_t seed = 1;
  for (auto _ : state) {
    GridMap map = generate_map(seed++, MapGenParams{}, "bench");
    benchmark::DoNotOptimize(map.free_count());
  }
}
BENCHMARK(BM_GenerateMap);

void BM_BeliefUpdate(benchmark::State& state) {
  const GridMap map = generate_map(5, MapGenParams{}, "bench");
  const Position start = map.free_cells().front();
  const BeliefState belief = init_belief(map, start);
  const FieldOfView fov = fov_cells(map, start);
  for (auto _ : state) {
    BeliefState b = update_belief(belief, fov, std::nullopt);
    benchmark::DoNotOptimize(b.probs().data());
  }
}
BENCHMARK(BM_BeliefUpdate);

void BM_PlanAction(benchmark::State& state) {
  const GridMap map = generate_map(5, MapGenParams{}, "bench");
  const Position start = map.free_cells().front();
  const BeliefState belief = init_belief(map, start);
  PomcpConfig cfg;
  cfg.max_samples = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    cfg.seed = seed++;
    benchmark::DoNotOptimize(plan_action(map, start, belief, cfg));
  }
}
BENCHMARK(BM_PlanAction)->Arg(5)->Arg(25)->Arg(50)->Arg(150)->Arg(250);

void BM_Episode(benchmark::State& state) {
  const GridMap map = generate_map(5, MapGenParams{}, "bench");
  const auto cells = map.free_cells();
  PomcpConfig cfg;
  cfg.max_samples = 250;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    cfg.seed = seed++;
    Trajectory t =
        generate_trajectory(map, cells.front(), cells.back(), cfg, 40);
    benchmark::DoNotOptimize(t.steps.size());
  }
}
BENCHMARK(BM_Episode);

}  // namespace

BENCHMARK_MAIN();
