#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "tomsyn/dataset.hpp"
#include "tomsyn/neural/checkpoint.hpp"
#include "tomsyn/neural/layers.hpp"

namespace tomsyn {

enum class Variant { Beliefs, NoBeliefs };

// Checkpoint architecture descriptors.
std::string_view variant_descriptor(Variant v);
Variant variant_from_descriptor(std::string_view descriptor);
// CLI spelling: "beliefs" / "nobeliefs".
Variant variant_from_name(std::string_view name);
std::string_view variant_name(Variant v);

struct LossWeights {
  double target = 1.0;
  double action = 1.0;
  double state = 1.0;
  double belief = 1.0;  // ignored by the NoBeliefs variant
};

struct PerHeadLoss {
  double target = 0.0;
  double action = 0.0;
  double state = 0.0;
  double belief = 0.0;
  double total = 0.0;  // weighted sum of the above
};

namespace detail {

// conv -> BN -> leaky -> conv -> BN, identity skip, leaky after the add.
template <typename T>
struct ResBlock {
  neural::Conv2d<T> conv1;
  neural::Conv2d<T> conv2;
  neural::BatchNorm<T> bn1;
  neural::BatchNorm<T> bn2;
  std::vector<T> c1, b1, a1, c2, b2, out;
  std::vector<T> d_sum, d_c2, d_a1, d_b1, d_c1;

  ResBlock(const std::string& name, int channels);
  void forward(const T* x, int n, neural::Mode mode, bool update_running);
  // d_x is overwritten with this block's input gradient.
  void backward(const T* x, const T* d_out, T* d_x, int n);
  std::vector<neural::Param<T>*> params();
};

// conv32 -> leaky -> conv16 -> leaky, then FC(1936->121) summed with
// conv16->4 -> conv4->1 flattened; two parallel paths into one logit map.
template <typename T>
struct SpatialHead {
  neural::Conv2d<T> conv_a;
  neural::Conv2d<T> conv_b;
  neural::Conv2d<T> conv_c;
  neural::Conv2d<T> conv_d;
  neural::Linear<T> fc;
  std::vector<T> a_out, a_act, b_out, b_act, c_out, d_out, logits;
  std::vector<T> d_logits;  // loss writes here before backward
  std::vector<T> d_b_act, d_b_scratch, d_c, d_b_out, d_a_act, d_a_out,
      d_trunk_scratch;

  explicit SpatialHead(const std::string& name);
  void forward(const T* trunk, int n);
  void backward(const T* trunk, T* d_trunk_accum, int n);
  std::vector<neural::Param<T>*> params();
};

// conv32 -> leaky -> global average pool -> FC32 -> leaky -> FC9.
template <typename T>
struct ActionHead {
  neural::Conv2d<T> conv;
  neural::Linear<T> fc1;
  neural::Linear<T> fc2;
  std::vector<T> c_out, c_act, gap, f1_out, f1_act, logits;
  std::vector<T> d_logits;
  std::vector<T> d_f1_act, d_f1_out, d_gap, d_c_act, d_c_out, d_trunk_scratch;

  explicit ActionHead(const std::string& name);
  void forward(const T* trunk, int n);
  void backward(const T* trunk, T* d_trunk_accum, int n);
  std::vector<neural::Param<T>*> params();
};

}  // namespace detail

// The observer: shared trunk (20->32 projection conv + 2 residual blocks),
// spatial heads for target/state (plus belief in the Beliefs variant) and
// the action head. Templated so gradient checks can run the same code in
// double precision; training uses float.
template <typename T>
class ObserverModel {
 public:
  ObserverModel(Variant variant, std::uint64_t seed);

  Variant variant() const { return variant_; }
  std::string descriptor() const {
    return std::string(variant_descriptor(variant_));
  }

  // x: n rows of kInputSize floats (the flattened 11x11x20 tensors).
  void forward(const T* x, int n, neural::Mode mode,
               bool update_running = true);

  // Losses of the last forward against labels (belief may be null for the
  // NoBeliefs variant). with_grads also writes the heads' logit gradients,
  // scaled by the loss weights, ready for backward().
  PerHeadLoss compute_loss(const std::int32_t* target,
                           const std::int32_t* action,
                           const std::int32_t* state, const T* belief,
                           const LossWeights& w, bool with_grads);

  // Backpropagates the logit gradients left by compute_loss, accumulating
  // into every parameter's gradient.
  void backward(const T* x, int n);

  const std::vector<T>& target_logits() const { return target_.logits; }
  const std::vector<T>& action_logits() const { return action_.logits; }
  const std::vector<T>& state_logits() const { return state_.logits; }
  const std::vector<T>& belief_logits() const;

  std::vector<neural::Param<T>*> params();
  void zero_grads();

  neural::CheckpointData to_checkpoint() const;
  void load(const neural::CheckpointData& data);

 private:
  Variant variant_;
  neural::Conv2d<T> conv_in_;
  detail::ResBlock<T> block1_;
  detail::ResBlock<T> block2_;
  detail::SpatialHead<T> target_;
  detail::ActionHead<T> action_;
  detail::SpatialHead<T> state_;
  std::unique_ptr<detail::SpatialHead<T>> belief_;
  std::vector<T> stem_;  // conv_in output
  std::vector<T> d_trunk_, d_mid_, d_stem_;
  int last_n_ = 0;
};

// Restricted 4-way argmax over the object cells; ties go to the lowest cell
// index. Returns the object index (0 = the true target).
template <typename T>
int predict_target(const T* target_logits, const ObjectSet& objects);

template <typename T>
int argmax_row(const T* row, int k);

}  // namespace tomsyn
