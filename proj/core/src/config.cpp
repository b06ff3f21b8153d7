#include "tomsyn/config.hpp"

#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "tomsyn/error.hpp"

namespace tomsyn {
namespace {

using nlohmann::json;

json to_json(const RunConfig& c) {
  // Ordered so the emitted file reads top-down like the pipeline runs.
  json j = json::object();
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  j["jobs"] = c.jobs;
  j["maps"] = {{"wall_density", c.map_params.wall_density},
               {"column_count", c.map_params.column_count},
               {"border", c.map_params.border},
               {"max_retries", c.map_params.max_retries},
               {"train_pool", c.train_map_pool},
               {"test_count", c.test_map_count}};
  j["actor"] = {{"max_samples", c.actor.max_samples},
                {"ucb_c", c.actor.ucb_c},
                {"discount", c.actor.discount},
                {"rollout_depth", c.actor.rollout_depth},
                {"reward_target", c.actor.reward_target},
                {"step_cost", c.actor.step_cost},
                {"trajectories_per_map", c.trajectories_per_map},
                {"max_steps", c.max_steps}};
  j["train"] = {{"base_lr", c.train.base_lr},
                {"batch_size", c.train.batch_size},
                {"max_epochs", c.train.max_epochs},
                {"early_stop_patience", c.train.early_stop_patience},
                {"val_fraction", c.train.val_fraction},
                {"loss_weights",
                 {{"target", c.train.weights.target},
                  {"action", c.train.weights.action},
                  {"state", c.train.weights.state},
                  {"belief", c.train.weights.belief}}},
                {"milestones", c.train.milestones},
                {"lr_gamma", c.train.lr_gamma},
                {"l1", c.train.adam.l1},
                {"l2", c.train.adam.l2},
                {"lr_levels", c.lr_levels}};
  j["experiments"] = {{"curve_map_counts", c.curve_map_counts},
                      {"distractor_map_counts", c.distractor_map_counts},
                      {"generalization_map_count", c.generalization_map_count},
                      {"seeds", c.experiment_seeds},
                      {"test_budgets", c.test_budgets},
                      {"speed_factors", c.speed_factors},
                      {"finetune_maps", c.finetune_maps},
                      {"finetune_epochs", c.finetune_epochs},
                      {"finetune_lr", c.finetune_lr}};
  return j;
}

void from_json_strict(const json& j, RunConfig& c, const std::string& what) {
  try {
    // Every field optional: absent keys keep their defaults, so a partial
    // hand-written config is valid.
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("jobs")) c.jobs = j["jobs"].get<int>();
    if (j.contains("maps")) {
      const json& m = j["maps"];
      if (m.contains("wall_density"))
        c.map_params.wall_density = m["wall_density"].get<double>();
      if (m.contains("column_count"))
        c.map_params.column_count = m["column_count"].get<int>();
      if (m.contains("border")) c.map_params.border = m["border"].get<bool>();
      if (m.contains("max_retries"))
        c.map_params.max_retries = m["max_retries"].get<int>();
      if (m.contains("train_pool"))
        c.train_map_pool = m["train_pool"].get<int>();
      if (m.contains("test_count"))
        c.test_map_count = m["test_count"].get<int>();
    }
    if (j.contains("actor")) {
      const json& a = j["actor"];
      if (a.contains("max_samples"))
        c.actor.max_samples = a["max_samples"].get<int>();
      if (a.contains("ucb_c")) c.actor.ucb_c = a["ucb_c"].get<double>();
      if (a.contains("discount")) c.actor.discount = a["discount"].get<double>();
      if (a.contains("rollout_depth"))
        c.actor.rollout_depth = a["rollout_depth"].get<int>();
      if (a.contains("reward_target"))
        c.actor.reward_target = a["reward_target"].get<double>();
      if (a.contains("step_cost"))
        c.actor.step_cost = a["step_cost"].get<double>();
      if (a.contains("trajectories_per_map"))
        c.trajectories_per_map = a["trajectories_per_map"].get<int>();
      if (a.contains("max_steps")) c.max_steps = a["max_steps"].get<int>();
    }
    if (j.contains("train")) {
      const json& t = j["train"];
      if (t.contains("base_lr")) c.train.base_lr = t["base_lr"].get<double>();
      if (t.contains("batch_size"))
        c.train.batch_size = t["batch_size"].get<int>();
      if (t.contains("max_epochs"))
        c.train.max_epochs = t["max_epochs"].get<int>();
      if (t.contains("early_stop_patience"))
        c.train.early_stop_patience = t["early_stop_patience"].get<int>();
      if (t.contains("val_fraction"))
        c.train.val_fraction = t["val_fraction"].get<double>();
      if (t.contains("loss_weights")) {
        const json& w = t["loss_weights"];
        if (w.contains("target"))
          c.train.weights.target = w["target"].get<double>();
        if (w.contains("action"))
          c.train.weights.action = w["action"].get<double>();
        if (w.contains("state")) c.train.weights.state = w["state"].get<double>();
        if (w.contains("belief"))
          c.train.weights.belief = w["belief"].get<double>();
      }
      if (t.contains("milestones"))
        c.train.milestones = t["milestones"].get<std::vector<int>>();
      if (t.contains("lr_gamma")) c.train.lr_gamma = t["lr_gamma"].get<double>();
      if (t.contains("l1")) c.train.adam.l1 = t["l1"].get<double>();
      if (t.contains("l2")) c.train.adam.l2 = t["l2"].get<double>();
      if (t.contains("lr_levels"))
        c.lr_levels = t["lr_levels"].get<std::vector<double>>();
    }
    if (j.contains("experiments")) {
      const json& e = j["experiments"];
      if (e.contains("curve_map_counts"))
        c.curve_map_counts = e["curve_map_counts"].get<std::vector<int>>();
      if (e.contains("distractor_map_counts"))
        c.distractor_map_counts =
            e["distractor_map_counts"].get<std::vector<int>>();
      if (e.contains("generalization_map_count"))
        c.generalization_map_count = e["generalization_map_count"].get<int>();
      if (e.contains("seeds"))
        c.experiment_seeds = e["seeds"].get<std::vector<std::uint64_t>>();
      if (e.contains("test_budgets"))
        c.test_budgets = e["test_budgets"].get<std::vector<int>>();
      if (e.contains("speed_factors"))
        c.speed_factors = e["speed_factors"].get<std::vector<double>>();
      if (e.contains("finetune_maps"))
        c.finetune_maps = e["finetune_maps"].get<int>();
      if (e.contains("finetune_epochs"))
        c.finetune_epochs = e["finetune_epochs"].get<int>();
      if (e.contains("finetune_lr"))
        c.finetune_lr = e["finetune_lr"].get<double>();
    }
  } catch (const json::exception& ex) {
    throw IntegrityError(what + ": malformed config: " + ex.what());
  }
}

}  // namespace

std::string RunConfig::resolved_out() const {
  if (!out_dir.empty()) return out_dir;
  if (const char* env = std::getenv("TOM_SYNERGY_OUT");
      env != nullptr && *env != '\0') {
    return env;
  }
  return "out";
}

std::string emit_config(const RunConfig& cfg) {
  return to_json(cfg).dump(2) + "\n";
}

RunConfig parse_config(const std::string& text, const std::string& what) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& ex) {
    throw IntegrityError(what + ": invalid JSON: " + ex.what());
  }
  RunConfig cfg;
  from_json_strict(j, cfg, what);
  return cfg;
}

void save_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open for writing: " + path);
  f << emit_config(cfg);
  if (!f.good()) throw InputError("write failed: " + path);
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config(buf.str(), path);
}

}  // namespace tomsyn
