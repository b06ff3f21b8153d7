#include "tomsyn/pipeline.hpp"

#include <fstream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "tomsyn/error.hpp"
#include "tomsyn/experiments.hpp"
#include "tomsyn/neural/checkpoint.hpp"
#include "tomsyn/random.hpp"
#include "tomsyn/text.hpp"
#include "tomsyn/trajectory_io.hpp"

namespace tomsyn {
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kMapsIndexMagic = "tomsyn-maps v1";

std::string role_id(const std::string& role, int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d", i);
  return role + buf;
}

std::string fingerprint_of(const std::string& text) {
  return std::to_string(hash_str(text));
}

void append_actor_cfg(std::ostringstream& s, const PomcpConfig& pc) {
  s << "|samples=" << pc.max_samples << "|ucb=" << fmt_float(pc.ucb_c)
    << "|discount=" << fmt_float(pc.discount)
    << "|rollout=" << pc.rollout_depth
    << "|reward=" << fmt_float(pc.reward_target)
    << "|step_cost=" << fmt_float(pc.step_cost);
}

}  // namespace

std::string condition_tag(const EvalCondition& cond) {
  std::string tag = distractor_mode_name(cond.mode);
  if (cond.budget != 0) tag += "/b" + std::to_string(cond.budget);
  if (cond.speed != 1.0) tag += "/x" + fmt_float(cond.speed);
  return tag;
}

std::string read_fingerprint(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return {};
  std::string line;
  std::getline(f, line);
  return line;
}

void write_fingerprint(const fs::path& path, const std::string& value) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open for writing: " + path.string());
  f << value << '\n';
  if (!f.good()) throw InputError("write failed: " + path.string());
}

Pipeline::Pipeline(RunConfig cfg) : cfg_(std::move(cfg)), out_(cfg_.resolved_out()) {
  if (cfg_.jobs < 1) throw UsageError("jobs must be >= 1");
  if (cfg_.train_map_pool < 0 || cfg_.test_map_count < 0) {
    throw UsageError("map counts must be >= 0");
  }
#ifdef _OPENMP
  omp_set_num_threads(cfg_.jobs);
#endif
}

fs::path Pipeline::maps_dir() const {
  return cfg_.maps_dir.empty() ? out_ / "maps" : fs::path(cfg_.maps_dir);
}

std::uint64_t Pipeline::map_seed(const std::string& id) const {
  return derive_seed(cfg_.seed, {hash_str("map"), hash_str(id)});
}

std::string Pipeline::maps_fingerprint() const {
  std::ostringstream s;
  s << "maps|seed=" << cfg_.seed << "|pool=" << cfg_.train_map_pool
    << "|test=" << cfg_.test_map_count
    << "|density=" << fmt_float(cfg_.map_params.wall_density)
    << "|columns=" << cfg_.map_params.column_count
    << "|border=" << cfg_.map_params.border
    << "|retries=" << cfg_.map_params.max_retries;
  return fingerprint_of(s.str());
}

void Pipeline::generate_and_save_maps() {
  fs::create_directories(maps_dir());
  std::vector<GridMap> pool;
  std::vector<GridMap> tests;
  pool.reserve(cfg_.train_map_pool);
  tests.reserve(cfg_.test_map_count);
  for (int i = 0; i < cfg_.train_map_pool; ++i) {
    const std::string id = role_id("train", i);
    pool.push_back(generate_map(map_seed(id), cfg_.map_params, id));
  }
  for (int i = 0; i < cfg_.test_map_count; ++i) {
    const std::string id = role_id("test", i);
    tests.push_back(generate_map(map_seed(id), cfg_.map_params, id));
  }

  std::ostringstream index;
  index << kMapsIndexMagic << '\n';
  index << "fingerprint " << maps_fingerprint() << '\n';
  index << "count " << (pool.size() + tests.size()) << '\n';
  auto dump = [&](const std::vector<GridMap>& maps, const char* role) {
    for (const GridMap& m : maps) {
      index << m.id() << ' ' << role << '\n';
      std::ofstream f(maps_dir() / (m.id() + ".map"), std::ios::binary);
      if (!f) throw InputError("cannot write map file for " + m.id());
      f << map_to_text(m);
      if (!f.good()) throw InputError("write failed for map " + m.id());
    }
  };
  dump(pool, "train");
  dump(tests, "test");

  std::ofstream f(maps_dir() / "index.txt", std::ios::binary);
  if (!f) throw InputError("cannot write maps index");
  f << index.str();
  if (!f.good()) throw InputError("write failed: maps index");

  train_pool_ = std::move(pool);
  test_maps_ = std::move(tests);
}

void Pipeline::load_maps_from_disk() {
  std::ifstream f(maps_dir() / "index.txt", std::ios::binary);
  if (!f) throw InputError("cannot open maps index");
  std::string line;
  std::getline(f, line);
  if (line != kMapsIndexMagic) throw IntegrityError("bad maps index magic");
  std::getline(f, line);  // fingerprint, already verified by caller
  std::getline(f, line);
  const auto count_fields = split_fields(line);
  if (count_fields.size() != 2 || count_fields[0] != "count") {
    throw IntegrityError("bad maps index count line");
  }
  const int count = parse_int<int>(count_fields[1], "map count");

  std::vector<GridMap> pool;
  std::vector<GridMap> tests;
  for (int i = 0; i < count; ++i) {
    if (!std::getline(f, line)) throw IntegrityError("maps index truncated");
    const auto fields = split_fields(line);
    if (fields.size() != 2) throw IntegrityError("bad maps index row");
    const std::string id(fields[0]);
    std::ifstream mf(maps_dir() / (id + ".map"), std::ios::binary);
    if (!mf) throw InputError("missing map file for " + id);
    std::ostringstream buf;
    buf << mf.rdbuf();
    GridMap map = map_from_text(buf.str());
    if (map.id() != id) {
      throw IntegrityError("map file id mismatch for " + id);
    }
    if (fields[1] == "train") {
      pool.push_back(std::move(map));
    } else if (fields[1] == "test") {
      tests.push_back(std::move(map));
    } else {
      throw IntegrityError("bad map role in index: " + std::string(fields[1]));
    }
  }
  if (static_cast<int>(pool.size()) != cfg_.train_map_pool ||
      static_cast<int>(tests.size()) != cfg_.test_map_count) {
    throw IntegrityError("maps index does not match configured counts");
  }
  train_pool_ = std::move(pool);
  test_maps_ = std::move(tests);
}

void Pipeline::ensure_maps() {
  if (train_pool_.has_value()) return;
  const fs::path index = maps_dir() / "index.txt";
  if (fs::exists(index)) {
    std::ifstream f(index, std::ios::binary);
    std::string magic, fp_line;
    std::getline(f, magic);
    std::getline(f, fp_line);
    if (magic == kMapsIndexMagic &&
        fp_line == "fingerprint " + maps_fingerprint()) {
      load_maps_from_disk();
      return;
    }
  }
  generate_and_save_maps();
}

const std::vector<GridMap>& Pipeline::train_pool() {
  ensure_maps();
  return *train_pool_;
}

const std::vector<GridMap>& Pipeline::test_maps() {
  ensure_maps();
  return *test_maps_;
}

std::vector<GridMap> Pipeline::train_subset(int map_count) {
  const std::vector<GridMap>& pool = train_pool();
  if (map_count < 1) throw UsageError("need at least 1 training map");
  if (map_count > static_cast<int>(pool.size())) {
    throw InputError("requested " + std::to_string(map_count) +
                     " training maps but the pool holds " +
                     std::to_string(pool.size()));
  }
  return {pool.begin(), pool.begin() + map_count};
}

std::string Pipeline::traj_fingerprint(const std::string& role,
                                       int budget) const {
  std::ostringstream s;
  s << "traj|" << role << "|maps=" << maps_fingerprint()
    << "|budget=" << budget << "|per_map=" << cfg_.trajectories_per_map
    << "|max_steps=" << cfg_.max_steps;
  PomcpConfig pc = cfg_.actor;
  pc.max_samples = budget;
  append_actor_cfg(s, pc);
  return fingerprint_of(s.str());
}

const std::vector<Trajectory>& Pipeline::trajectories_for(
    const std::string& role, int budget) {
  const std::string key = role + "-b" + std::to_string(budget);
  if (auto it = traj_cache_.find(key); it != traj_cache_.end()) {
    return it->second;
  }
  ensure_maps();
  const fs::path file = out_ / "traj" / (key + ".traj");
  const fs::path fp = out_ / "traj" / (key + ".traj.fp");
  const std::string want = traj_fingerprint(role, budget);
  if (fs::exists(file) && read_fingerprint(fp) == want) {
    return traj_cache_[key] = load_trajectories(file.string());
  }
  const std::vector<GridMap>& maps =
      role == "train" ? *train_pool_ : *test_maps_;
  PomcpConfig pc = cfg_.actor;
  pc.max_samples = budget;
  const std::uint64_t seed =
      derive_seed(cfg_.seed, {hash_str("trajectories"), hash_str(role),
                              static_cast<std::uint64_t>(budget)});
  std::vector<Trajectory> trajs = generate_trajectories(
      maps, pc, seed, cfg_.trajectories_per_map, cfg_.max_steps);
  fs::create_directories(out_ / "traj");
  save_trajectories(file.string(), trajs);
  write_fingerprint(fp, want);
  return traj_cache_[key] = std::move(trajs);
}

const std::vector<Trajectory>& Pipeline::train_trajectories() {
  return trajectories_for("train", cfg_.actor.max_samples);
}

const std::vector<Trajectory>& Pipeline::test_trajectories(int budget) {
  return trajectories_for("test", budget == 0 ? cfg_.actor.max_samples : budget);
}

Dataset Pipeline::training_dataset(int map_count, std::uint64_t run_seed,
                                   DatasetManifest* manifest) {
  const std::vector<GridMap> maps = train_subset(map_count);
  const std::vector<Trajectory>& all = train_trajectories();
  // Episodes are stored map-major, so the subset's episodes are a prefix.
  const std::size_t take = static_cast<std::size_t>(map_count) *
                           static_cast<std::size_t>(cfg_.trajectories_per_map);
  const std::vector<Trajectory> slice(all.begin(), all.begin() + take);
  const std::uint64_t seed =
      derive_seed(cfg_.seed, {hash_str("train-data"),
                              static_cast<std::uint64_t>(map_count), run_seed});
  if (manifest != nullptr) *manifest = summarize(maps, slice, seed);
  return build_dataset(maps, slice, DistractorMode{}, seed, manifest);
}

Dataset Pipeline::test_eval_dataset(const EvalCondition& cond,
                                    DatasetManifest* manifest) {
  const std::vector<Trajectory>& base = test_trajectories(cond.budget);
  std::vector<Trajectory> resampled;
  const std::vector<Trajectory>* trajs = &base;
  if (cond.speed != 1.0) {
    resampled.reserve(base.size());
    for (const Trajectory& t : base) {
      resampled.push_back(resample_speed(t, cond.speed));
    }
    trajs = &resampled;
  }
  const std::uint64_t seed = derive_seed(
      cfg_.seed, {hash_str("test-data"), hash_str(condition_tag(cond))});
  if (manifest != nullptr) *manifest = summarize(test_maps(), *trajs, seed);
  return build_dataset(test_maps(), *trajs, cond.mode, seed, manifest);
}

fs::path Pipeline::model_path(Variant v, int map_count,
                              std::uint64_t run_seed) const {
  std::ostringstream name;
  name << variant_name(v) << "-m" << map_count << "-s" << run_seed << ".ckpt";
  return models_dir() / name.str();
}

std::string Pipeline::model_fingerprint(Variant v, int map_count,
                                        std::uint64_t run_seed) const {
  std::ostringstream s;
  s << "model|" << variant_descriptor(v) << "|maps=" << maps_fingerprint()
    << "|traj=" << traj_fingerprint("train", cfg_.actor.max_samples)
    << "|count=" << map_count << "|run_seed=" << run_seed
    << "|lr=" << fmt_float(cfg_.train.base_lr)
    << "|batch=" << cfg_.train.batch_size
    << "|epochs=" << cfg_.train.max_epochs
    << "|patience=" << cfg_.train.early_stop_patience
    << "|val=" << fmt_float(cfg_.train.val_fraction)
    << "|w=" << fmt_float(cfg_.train.weights.target) << ','
    << fmt_float(cfg_.train.weights.action) << ','
    << fmt_float(cfg_.train.weights.state) << ','
    << fmt_float(cfg_.train.weights.belief) << "|gamma="
    << fmt_float(cfg_.train.lr_gamma) << "|l1=" << fmt_float(cfg_.train.adam.l1)
    << "|l2=" << fmt_float(cfg_.train.adam.l2) << "|milestones=";
  for (int m : cfg_.train.milestones) s << m << ',';
  return fingerprint_of(s.str());
}

bool Pipeline::model_cached(Variant v, int map_count,
                            std::uint64_t run_seed) const {
  const fs::path p = model_path(v, map_count, run_seed);
  return fs::exists(p) &&
         read_fingerprint(p.string() + ".fp") ==
             model_fingerprint(v, map_count, run_seed);
}

std::uint64_t Pipeline::model_init_seed(int map_count,
                                        std::uint64_t run_seed) const {
  return derive_seed(cfg_.seed, {hash_str("model-init"),
                                 static_cast<std::uint64_t>(map_count),
                                 run_seed});
}

std::uint64_t Pipeline::train_loop_seed(int map_count,
                                        std::uint64_t run_seed) const {
  return derive_seed(cfg_.seed, {hash_str("train-loop"),
                                 static_cast<std::uint64_t>(map_count),
                                 run_seed});
}

void Pipeline::save_model(const ObserverModel<float>& model,
                          const TrainHistory& history, Variant v,
                          int map_count, std::uint64_t run_seed) {
  const fs::path p = model_path(v, map_count, run_seed);
  fs::create_directories(models_dir());
  neural::save_checkpoint(p.string(), model.to_checkpoint());
  save_history(p.string() + ".history", history);
  write_fingerprint(p.string() + ".fp",
                    model_fingerprint(v, map_count, run_seed));
}

ObserverModel<float> Pipeline::trained_model(Variant v, int map_count,
                                             std::uint64_t run_seed,
                                             TrainHistory* history) {
  const fs::path p = model_path(v, map_count, run_seed);
  ObserverModel<float> model(v, model_init_seed(map_count, run_seed));
  if (model_cached(v, map_count, run_seed)) {
    model.load(neural::load_checkpoint(p.string()));
    if (history != nullptr) *history = load_history(p.string() + ".history");
    return model;
  }
  Dataset ds = training_dataset(map_count, run_seed);
  TrainConfig tc = cfg_.train;
  tc.seed = train_loop_seed(map_count, run_seed);
  TrainHistory h = train(model, ds, tc);
  save_model(model, h, v, map_count, run_seed);
  if (history != nullptr) *history = std::move(h);
  return model;
}

}  // namespace tomsyn
