#pragma once

#include <vector>

#include "tomsyn/neural/tensor.hpp"

namespace tomsyn::neural {

// Adds lambda1 * sign(w) + 2 * lambda2 * w to the gradient of every
// decay-flagged parameter (weight matrices only, not biases or norms).
template <typename T>
void add_l1_l2(Param<T>& p, double lambda1, double lambda2);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double l1 = 0.005;
  double l2 = 0.001;
};

template <typename T>
class Adam {
 public:
  Adam(std::vector<Param<T>*> params, AdamConfig cfg = {});

  // One update with the given learning rate; regularization is folded into
  // the gradients first, then everything is zeroed for the next batch.
  void step(double lr);
  int steps_taken() const { return t_; }

 private:
  std::vector<Param<T>*> params_;
  AdamConfig cfg_;
  std::vector<std::vector<T>> m_;
  std::vector<std::vector<T>> v_;
  int t_ = 0;
};

// Step decay: lr(epoch) = base * gamma^(milestones passed). Epochs are
// 1-based; a milestone counts as passed once epoch > milestone.
struct LrSchedule {
  double base_lr = 5e-4;
  std::vector<int> milestones = {30, 60, 80, 160};
  double gamma = 0.5;

  double at(int epoch) const;
};

}  // namespace tomsyn::neural
