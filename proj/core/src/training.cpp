#include "tomsyn/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>

#include "tomsyn/error.hpp"
#include "tomsyn/random.hpp"
#include "tomsyn/text.hpp"

namespace tomsyn {
namespace {

struct BatchBuffers {
  std::vector<float> x;
  std::vector<std::int32_t> target;
  std::vector<std::int32_t> action;
  std::vector<std::int32_t> state;
  std::vector<float> belief;

  void gather(const Dataset& ds, const std::vector<int>& order, int begin,
              int n) {
    x.resize(static_cast<std::size_t>(n) * kInputSize);
    target.resize(n);
    action.resize(n);
    state.resize(n);
    belief.resize(static_cast<std::size_t>(n) * kCellCount);
    for (int i = 0; i < n; ++i) {
      const int row = order[begin + i];
      std::memcpy(x.data() + static_cast<std::size_t>(i) * kInputSize,
                  ds.input_row(row), sizeof(float) * kInputSize);
      target[i] = ds.label_target[row];
      action[i] = ds.label_action[row];
      state[i] = ds.label_state[row];
      std::memcpy(belief.data() + static_cast<std::size_t>(i) * kCellCount,
                  ds.belief_row(row), sizeof(float) * kCellCount);
    }
  }
};

double validation_loss(ObserverModel<float>& model, const Dataset& ds,
                       const std::vector<int>& val, const LossWeights& w,
                       BatchBuffers& buf, int batch_size) {
  double total = 0.0;
  int counted = 0;
  for (std::size_t at = 0; at < val.size(); at += batch_size) {
    const int n = static_cast<int>(
        std::min<std::size_t>(batch_size, val.size() - at));
    buf.gather(ds, val, static_cast<int>(at), n);
    model.forward(buf.x.data(), n, neural::Mode::Eval);
    const PerHeadLoss loss =
        model.compute_loss(buf.target.data(), buf.action.data(),
                           buf.state.data(), buf.belief.data(), w,
                           /*with_grads=*/false);
    total += loss.total * n;
    counted += n;
  }
  return counted ? total / counted : 0.0;
}

TrainHistory run_loop(ObserverModel<float>& model, const Dataset& ds,
                      const TrainConfig& cfg, bool use_schedule) {
  if (ds.size() == 0) throw InputError("training dataset is empty");

  TrainHistory history;
  Split split = split_by_episode(ds, cfg.val_fraction);
  const bool has_val = !split.val.empty();

  neural::LrSchedule schedule{cfg.base_lr, cfg.milestones, cfg.lr_gamma};
  neural::Adam<float> adam(model.params(), cfg.adam);
  BatchBuffers buf;

  neural::CheckpointData best = model.to_checkpoint();
  double best_metric = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const double lr = use_schedule ? schedule.at(epoch) : cfg.base_lr;
    Rng rng(derive_seed(cfg.seed, {hash_str("shuffle"),
                                   static_cast<std::uint64_t>(epoch)}));
    rng.shuffle(split.train);

    PerHeadLoss epoch_loss;
    int seen = 0;
    for (std::size_t at = 0; at < split.train.size(); at += cfg.batch_size) {
      const int n = static_cast<int>(
          std::min<std::size_t>(cfg.batch_size, split.train.size() - at));
      buf.gather(ds, split.train, static_cast<int>(at), n);
      model.forward(buf.x.data(), n, neural::Mode::Train);
      const PerHeadLoss loss =
          model.compute_loss(buf.target.data(), buf.action.data(),
                             buf.state.data(), buf.belief.data(), cfg.weights,
                             /*with_grads=*/true);
      if (!std::isfinite(loss.total)) {
        throw NumericalError("training diverged: non-finite loss at epoch " +
                             std::to_string(epoch) + ", batch offset " +
                             std::to_string(at));
      }
      model.backward(buf.x.data(), n);
      adam.step(lr);

      epoch_loss.target += loss.target * n;
      epoch_loss.action += loss.action * n;
      epoch_loss.state += loss.state * n;
      epoch_loss.belief += loss.belief * n;
      epoch_loss.total += loss.total * n;
      seen += n;
    }
    epoch_loss.target /= seen;
    epoch_loss.action /= seen;
    epoch_loss.state /= seen;
    epoch_loss.belief /= seen;
    epoch_loss.total /= seen;

    const double val = has_val
                           ? validation_loss(model, ds, split.val, cfg.weights,
                                             buf, cfg.batch_size)
                           : epoch_loss.total;
    if (!std::isfinite(val)) {
      throw NumericalError("training diverged: non-finite validation loss "
                           "at epoch " +
                           std::to_string(epoch));
    }
    history.epochs.push_back({epoch, lr, epoch_loss, val});

    if (val < best_metric) {
      best_metric = val;
      best = model.to_checkpoint();
      history.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.early_stop_patience) {
      history.stopped_epoch = epoch;
      break;
    }
  }

  if (history.best_epoch > 0) {
    model.load(best);
    history.best_val = best_metric;
  }
  return history;
}

}  // namespace

Split split_by_episode(const Dataset& ds, double val_fraction) {
  // Highest episode index per map defines that map's episode count.
  std::map<int, int> episodes;  // map_index -> count
  for (const SampleInfo& s : ds.info) {
    episodes[s.map_index] = std::max(episodes[s.map_index], s.episode + 1);
  }
  std::map<int, int> first_val;  // map_index -> first held-out episode
  for (const auto& [map_index, count] : episodes) {
    int n_val = 0;
    if (val_fraction > 0.0 && count > 1) {
      n_val = std::max(1, static_cast<int>(val_fraction * count));
      n_val = std::min(n_val, count - 1);
    }
    first_val[map_index] = count - n_val;
  }
  Split split;
  for (int i = 0; i < ds.size(); ++i) {
    const SampleInfo& s = ds.info[i];
    (s.episode >= first_val[s.map_index] ? split.val : split.train)
        .push_back(i);
  }
  return split;
}

TrainHistory train(ObserverModel<float>& model, const Dataset& ds,
                   const TrainConfig& cfg) {
  return run_loop(model, ds, cfg, /*use_schedule=*/true);
}

TrainHistory finetune(ObserverModel<float>& model, const Dataset& ds,
                      const TrainConfig& cfg) {
  return run_loop(model, ds, cfg, /*use_schedule=*/false);
}

Accuracy evaluate(ObserverModel<float>& model, const Dataset& ds,
                  const std::vector<int>* indices, int batch_size) {
  std::vector<int> all;
  if (indices == nullptr) {
    all.resize(ds.size());
    for (int i = 0; i < ds.size(); ++i) all[i] = i;
    indices = &all;
  }
  Accuracy acc;
  BatchBuffers buf;
  for (std::size_t at = 0; at < indices->size(); at += batch_size) {
    const int n = static_cast<int>(
        std::min<std::size_t>(batch_size, indices->size() - at));
    buf.gather(ds, *indices, static_cast<int>(at), n);
    model.forward(buf.x.data(), n, neural::Mode::Eval);
    for (int i = 0; i < n; ++i) {
      const int row = (*indices)[at + i];
      const float* t_logits =
          model.target_logits().data() + static_cast<std::size_t>(i) * kCellCount;
      const float* a_logits =
          model.action_logits().data() + static_cast<std::size_t>(i) * kActionCount;
      const float* s_logits =
          model.state_logits().data() + static_cast<std::size_t>(i) * kCellCount;
      acc.n += 1;
      if (predict_target(t_logits, ds.info[row].objects) == 0) {
        acc.target_correct += 1;
      }
      if (argmax_row(t_logits, kCellCount) == ds.label_target[row]) {
        acc.target_cell_correct += 1;
      }
      if (argmax_row(a_logits, kActionCount) == ds.label_action[row]) {
        acc.action_correct += 1;
      }
      if (argmax_row(s_logits, kCellCount) == ds.label_state[row]) {
        acc.state_correct += 1;
      }
    }
  }
  return acc;
}

void save_history(const std::string& path, const TrainHistory& history) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open for writing: " + path);
  f << "tomsyn-history v1\n";
  for (const EpochRecord& e : history.epochs) {
    f << e.epoch << ' ' << fmt_float(e.lr) << ' ' << fmt_float(e.train.total)
      << ' ' << fmt_float(e.train.target) << ' ' << fmt_float(e.train.action)
      << ' ' << fmt_float(e.train.state) << ' ' << fmt_float(e.train.belief)
      << ' ' << fmt_float(e.val_total) << '\n';
  }
  f << "best_epoch " << history.best_epoch << '\n';
  f << "best_val " << fmt_float(history.best_val) << '\n';
  f << "stopped_epoch " << history.stopped_epoch << '\n';
  if (!f.good()) throw InputError("write failed: " + path);
}

TrainHistory load_history(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open: " + path);
  std::string line;
  if (!std::getline(f, line) || line != "tomsyn-history v1") {
    throw IntegrityError(path + ": not a training history file");
  }
  TrainHistory history;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields[0] == "best_epoch") {
      history.best_epoch = parse_int<int>(fields.at(1), "best_epoch");
    } else if (fields[0] == "best_val") {
      history.best_val = parse_float<double>(fields.at(1), "best_val");
    } else if (fields[0] == "stopped_epoch") {
      history.stopped_epoch = parse_int<int>(fields.at(1), "stopped_epoch");
    } else {
      if (fields.size() != 8) {
        throw IntegrityError(path + ": malformed history line '" + line + "'");
      }
      EpochRecord e;
      e.epoch = parse_int<int>(fields[0], "epoch");
      e.lr = parse_float<double>(fields[1], "lr");
      e.train.total = parse_float<double>(fields[2], "total");
      e.train.target = parse_float<double>(fields[3], "target loss");
      e.train.action = parse_float<double>(fields[4], "action loss");
      e.train.state = parse_float<double>(fields[5], "state loss");
      e.train.belief = parse_float<double>(fields[6], "belief loss");
      e.val_total = parse_float<double>(fields[7], "validation loss");
      history.epochs.push_back(e);
    }
  }
  return history;
}

}  // namespace tomsyn
