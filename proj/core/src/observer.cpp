#include "tomsyn/observer.hpp"

#include <algorithm>

#include "tomsyn/error.hpp"
#include "tomsyn/neural/losses.hpp"
#include "tomsyn/random.hpp"

namespace tomsyn {

namespace {
constexpr int kTrunkChannels = 32;
constexpr int kHeadMidChannels = 16;
constexpr int kHeadConvChannels = 4;
constexpr int kSpatial = kCellCount;

template <typename T>
void resize(std::vector<T>& v, std::size_t size) {
  v.assign(size, T(0));
}
}  // namespace

std::string_view variant_descriptor(Variant v) {
  return v == Variant::Beliefs ? "beliefs-v1" : "nobeliefs-v1";
}

Variant variant_from_descriptor(std::string_view descriptor) {
  if (descriptor == "beliefs-v1") return Variant::Beliefs;
  if (descriptor == "nobeliefs-v1") return Variant::NoBeliefs;
  throw IntegrityError("unknown architecture descriptor '" +
                       std::string(descriptor) + "'");
}

Variant variant_from_name(std::string_view name) {
  if (name == "beliefs") return Variant::Beliefs;
  if (name == "nobeliefs") return Variant::NoBeliefs;
  throw UsageError("unknown architecture '" + std::string(name) +
                   "' (expected beliefs or nobeliefs)");
}

std::string_view variant_name(Variant v) {
  return v == Variant::Beliefs ? "beliefs" : "nobeliefs";
}

namespace detail {

template <typename T>
ResBlock<T>::ResBlock(const std::string& name, int channels)
    : conv1(name + ".conv1", 3, channels, channels),
      conv2(name + ".conv2", 3, channels, channels),
      bn1(name + ".bn1", channels),
      bn2(name + ".bn2", channels) {}

template <typename T>
void ResBlock<T>::forward(const T* x, int n, neural::Mode mode,
                          bool update_running) {
  const std::size_t size =
      static_cast<std::size_t>(n) * kSpatial * kTrunkChannels;
  resize(c1, size);
  resize(b1, size);
  resize(a1, size);
  resize(c2, size);
  resize(b2, size);
  resize(out, size);
  conv1.forward(x, c1.data(), n, kGridSize, kGridSize);
  bn1.forward(c1.data(), b1.data(), n, kSpatial, mode, update_running);
  neural::leaky_relu_forward(b1.data(), a1.data(), size);
  conv2.forward(a1.data(), c2.data(), n, kGridSize, kGridSize);
  bn2.forward(c2.data(), b2.data(), n, kSpatial, mode, update_running);
  for (std::size_t i = 0; i < size; ++i) {
    const T s = b2[i] + x[i];
    out[i] = s >= T(0) ? s : static_cast<T>(neural::kLeakySlope) * s;
  }
}

template <typename T>
void ResBlock<T>::backward(const T* x, const T* d_out, T* d_x, int n) {
  const std::size_t size =
      static_cast<std::size_t>(n) * kSpatial * kTrunkChannels;
  resize(d_sum, size);
  resize(d_c2, size);
  resize(d_a1, size);
  resize(d_b1, size);
  resize(d_c1, size);
  neural::leaky_relu_backward(out.data(), d_out, d_sum.data(), size);
  bn2.backward(d_sum.data(), d_c2.data(), n, kSpatial);
  conv2.backward(a1.data(), d_c2.data(), d_a1.data(), n, kGridSize, kGridSize);
  neural::leaky_relu_backward(a1.data(), d_a1.data(), d_b1.data(), size);
  bn1.backward(d_b1.data(), d_c1.data(), n, kSpatial);
  conv1.backward(x, d_c1.data(), d_x, n, kGridSize, kGridSize);
  neural::add_inplace(d_x, d_sum.data(), size);  // the identity skip
}

template <typename T>
std::vector<neural::Param<T>*> ResBlock<T>::params() {
  std::vector<neural::Param<T>*> out_params;
  for (auto* p : conv1.params()) out_params.push_back(p);
  for (auto* p : bn1.params()) out_params.push_back(p);
  for (auto* p : conv2.params()) out_params.push_back(p);
  for (auto* p : bn2.params()) out_params.push_back(p);
  return out_params;
}

template <typename T>
SpatialHead<T>::SpatialHead(const std::string& name)
    : conv_a(name + ".conv_a", 3, kTrunkChannels, kTrunkChannels),
      conv_b(name + ".conv_b", 3, kTrunkChannels, kHeadMidChannels),
      conv_c(name + ".conv_c", 3, kHeadMidChannels, kHeadConvChannels),
      conv_d(name + ".conv_d", 1, kHeadConvChannels, 1),
      fc(name + ".fc", kSpatial * kHeadMidChannels, kCellCount) {}

template <typename T>
void SpatialHead<T>::forward(const T* trunk, int n) {
  const std::size_t nn = static_cast<std::size_t>(n);
  resize(a_out, nn * kSpatial * kTrunkChannels);
  resize(a_act, nn * kSpatial * kTrunkChannels);
  resize(b_out, nn * kSpatial * kHeadMidChannels);
  resize(b_act, nn * kSpatial * kHeadMidChannels);
  resize(c_out, nn * kSpatial * kHeadConvChannels);
  resize(d_out, nn * kSpatial);
  resize(logits, nn * kCellCount);

  conv_a.forward(trunk, a_out.data(), n, kGridSize, kGridSize);
  neural::leaky_relu_forward(a_out.data(), a_act.data(), a_out.size());
  conv_b.forward(a_act.data(), b_out.data(), n, kGridSize, kGridSize);
  neural::leaky_relu_forward(b_out.data(), b_act.data(), b_out.size());
  // Path one: everything the head sees, flattened into a dense layer.
  fc.forward(b_act.data(), logits.data(), n);
  // Path two: a narrow convolutional map; summed in as a spatial prior.
  conv_c.forward(b_act.data(), c_out.data(), n, kGridSize, kGridSize);
  conv_d.forward(c_out.data(), d_out.data(), n, kGridSize, kGridSize);
  neural::add_inplace(logits.data(), d_out.data(), logits.size());
}

template <typename T>
void SpatialHead<T>::backward(const T* trunk, T* d_trunk_accum, int n) {
  const std::size_t nn = static_cast<std::size_t>(n);
  resize(d_b_act, nn * kSpatial * kHeadMidChannels);
  resize(d_b_scratch, nn * kSpatial * kHeadMidChannels);
  resize(d_c, nn * kSpatial * kHeadConvChannels);
  resize(d_b_out, nn * kSpatial * kHeadMidChannels);
  resize(d_a_act, nn * kSpatial * kTrunkChannels);
  resize(d_a_out, nn * kSpatial * kTrunkChannels);
  resize(d_trunk_scratch, nn * kSpatial * kTrunkChannels);

  // d_logits feeds both paths (the sum fans the gradient out unchanged).
  fc.backward(b_act.data(), d_logits.data(), d_b_act.data(), n);
  conv_d.backward(c_out.data(), d_logits.data(), d_c.data(), n, kGridSize,
                  kGridSize);
  conv_c.backward(b_act.data(), d_c.data(), d_b_scratch.data(), n, kGridSize,
                  kGridSize);
  neural::add_inplace(d_b_act.data(), d_b_scratch.data(), d_b_act.size());
  neural::leaky_relu_backward(b_act.data(), d_b_act.data(), d_b_out.data(),
                              b_act.size());
  conv_b.backward(a_act.data(), d_b_out.data(), d_a_act.data(), n, kGridSize,
                  kGridSize);
  neural::leaky_relu_backward(a_act.data(), d_a_act.data(), d_a_out.data(),
                              a_act.size());
  conv_a.backward(trunk, d_a_out.data(), d_trunk_scratch.data(), n, kGridSize,
                  kGridSize);
  neural::add_inplace(d_trunk_accum, d_trunk_scratch.data(),
                      d_trunk_scratch.size());
}

template <typename T>
std::vector<neural::Param<T>*> SpatialHead<T>::params() {
  std::vector<neural::Param<T>*> out_params;
  for (const auto& layer_params :
       {conv_a.params(), conv_b.params(), conv_c.params(), conv_d.params(),
        fc.params()}) {
    for (auto* p : layer_params) out_params.push_back(p);
  }
  return out_params;
}

template <typename T>
ActionHead<T>::ActionHead(const std::string& name)
    : conv(name + ".conv", 3, kTrunkChannels, kTrunkChannels),
      fc1(name + ".fc1", kTrunkChannels, kTrunkChannels),
      fc2(name + ".fc2", kTrunkChannels, kActionCount) {}

template <typename T>
void ActionHead<T>::forward(const T* trunk, int n) {
  const std::size_t nn = static_cast<std::size_t>(n);
  resize(c_out, nn * kSpatial * kTrunkChannels);
  resize(c_act, nn * kSpatial * kTrunkChannels);
  resize(gap, nn * kTrunkChannels);
  resize(f1_out, nn * kTrunkChannels);
  resize(f1_act, nn * kTrunkChannels);
  resize(logits, nn * kActionCount);

  conv.forward(trunk, c_out.data(), n, kGridSize, kGridSize);
  neural::leaky_relu_forward(c_out.data(), c_act.data(), c_out.size());
  neural::global_avg_pool_forward(c_act.data(), gap.data(), n, kSpatial,
                                  kTrunkChannels);
  fc1.forward(gap.data(), f1_out.data(), n);
  neural::leaky_relu_forward(f1_out.data(), f1_act.data(), f1_out.size());
  fc2.forward(f1_act.data(), logits.data(), n);
}

template <typename T>
void ActionHead<T>::backward(const T* trunk, T* d_trunk_accum, int n) {
  const std::size_t nn = static_cast<std::size_t>(n);
  resize(d_f1_act, nn * kTrunkChannels);
  resize(d_f1_out, nn * kTrunkChannels);
  resize(d_gap, nn * kTrunkChannels);
  resize(d_c_act, nn * kSpatial * kTrunkChannels);
  resize(d_c_out, nn * kSpatial * kTrunkChannels);
  resize(d_trunk_scratch, nn * kSpatial * kTrunkChannels);

  fc2.backward(f1_act.data(), d_logits.data(), d_f1_act.data(), n);
  neural::leaky_relu_backward(f1_act.data(), d_f1_act.data(), d_f1_out.data(),
                              f1_act.size());
  fc1.backward(gap.data(), d_f1_out.data(), d_gap.data(), n);
  neural::global_avg_pool_backward(d_gap.data(), d_c_act.data(), n, kSpatial,
                                   kTrunkChannels);
  neural::leaky_relu_backward(c_act.data(), d_c_act.data(), d_c_out.data(),
                              c_act.size());
  conv.backward(trunk, d_c_out.data(), d_trunk_scratch.data(), n, kGridSize,
                kGridSize);
  neural::add_inplace(d_trunk_accum, d_trunk_scratch.data(),
                      d_trunk_scratch.size());
}

template <typename T>
std::vector<neural::Param<T>*> ActionHead<T>::params() {
  std::vector<neural::Param<T>*> out_params;
  for (const auto& layer_params : {conv.params(), fc1.params(), fc2.params()}) {
    for (auto* p : layer_params) out_params.push_back(p);
  }
  return out_params;
}

template struct ResBlock<float>;
template struct ResBlock<double>;
template struct SpatialHead<float>;
template struct SpatialHead<double>;
template struct ActionHead<float>;
template struct ActionHead<double>;

}  // namespace detail

template <typename T>
ObserverModel<T>::ObserverModel(Variant variant, std::uint64_t seed)
    : variant_(variant),
      conv_in_("trunk.conv_in", 3, kPlaneCount, kTrunkChannels),
      block1_("trunk.block1", kTrunkChannels),
      block2_("trunk.block2", kTrunkChannels),
      target_("head.target"),
      action_("head.action"),
      state_("head.state") {
  if (variant == Variant::Beliefs) {
    belief_ = std::make_unique<detail::SpatialHead<T>>("head.belief");
  }
  // Shared parts are initialized first and the belief head last, so both
  // variants built from one seed share bit-identical common weights.
  Rng rng(derive_seed(seed, {hash_str("observer-init")}));
  conv_in_.init(rng);
  block1_.conv1.init(rng);
  block1_.conv2.init(rng);
  block2_.conv1.init(rng);
  block2_.conv2.init(rng);
  for (auto* head : {&target_, &state_}) {
    head->conv_a.init(rng);
    head->conv_b.init(rng);
    head->conv_c.init(rng);
    head->conv_d.init(rng);
    head->fc.init(rng);
  }
  action_.conv.init(rng);
  action_.fc1.init(rng);
  action_.fc2.init(rng);
  if (belief_) {
    belief_->conv_a.init(rng);
    belief_->conv_b.init(rng);
    belief_->conv_c.init(rng);
    belief_->conv_d.init(rng);
    belief_->fc.init(rng);
  }
}

template <typename T>
void ObserverModel<T>::forward(const T* x, int n, neural::Mode mode,
                               bool update_running) {
  last_n_ = n;
  resize(stem_, static_cast<std::size_t>(n) * kSpatial * kTrunkChannels);
  conv_in_.forward(x, stem_.data(), n, kGridSize, kGridSize);
  block1_.forward(stem_.data(), n, mode, update_running);
  block2_.forward(block1_.out.data(), n, mode, update_running);
  const T* trunk = block2_.out.data();
  target_.forward(trunk, n);
  action_.forward(trunk, n);
  state_.forward(trunk, n);
  if (belief_) belief_->forward(trunk, n);
}

template <typename T>
PerHeadLoss ObserverModel<T>::compute_loss(const std::int32_t* target,
                                           const std::int32_t* action,
                                           const std::int32_t* state,
                                           const T* belief,
                                           const LossWeights& w,
                                           bool with_grads) {
  const int n = last_n_;
  PerHeadLoss loss;
  const auto grad_buf = [&](std::vector<T>& buf, std::size_t size) -> T* {
    if (!with_grads) return nullptr;
    buf.assign(size, T(0));
    return buf.data();
  };

  loss.target = neural::softmax_cross_entropy(
      target_.logits.data(), target, n, kCellCount,
      grad_buf(target_.d_logits, target_.logits.size()), w.target);
  loss.action = neural::softmax_cross_entropy(
      action_.logits.data(), action, n, kActionCount,
      grad_buf(action_.d_logits, action_.logits.size()), w.action);
  loss.state = neural::softmax_cross_entropy(
      state_.logits.data(), state, n, kCellCount,
      grad_buf(state_.d_logits, state_.logits.size()), w.state);
  loss.total = w.target * loss.target + w.action * loss.action +
               w.state * loss.state;
  if (belief_) {
    if (belief == nullptr) {
      throw UsageError("belief labels required for the Beliefs variant");
    }
    loss.belief = neural::kl_divergence(
        belief_->logits.data(), belief, n, kCellCount,
        grad_buf(belief_->d_logits, belief_->logits.size()), w.belief);
    loss.total += w.belief * loss.belief;
  }
  return loss;
}

template <typename T>
void ObserverModel<T>::backward(const T* x, int n) {
  resize(d_trunk_, static_cast<std::size_t>(n) * kSpatial * kTrunkChannels);
  resize(d_mid_, d_trunk_.size());
  resize(d_stem_, d_trunk_.size());
  target_.backward(block2_.out.data(), d_trunk_.data(), n);
  action_.backward(block2_.out.data(), d_trunk_.data(), n);
  state_.backward(block2_.out.data(), d_trunk_.data(), n);
  if (belief_) belief_->backward(block2_.out.data(), d_trunk_.data(), n);
  block2_.backward(block1_.out.data(), d_trunk_.data(), d_mid_.data(), n);
  block1_.backward(stem_.data(), d_mid_.data(), d_stem_.data(), n);
  conv_in_.backward(x, d_stem_.data(), nullptr, n, kGridSize, kGridSize);
}

template <typename T>
const std::vector<T>& ObserverModel<T>::belief_logits() const {
  if (!belief_) {
    throw UsageError("the NoBeliefs variant has no belief head");
  }
  return belief_->logits;
}

template <typename T>
std::vector<neural::Param<T>*> ObserverModel<T>::params() {
  std::vector<neural::Param<T>*> out;
  for (auto* p : conv_in_.params()) out.push_back(p);
  for (auto* p : block1_.params()) out.push_back(p);
  for (auto* p : block2_.params()) out.push_back(p);
  for (auto* p : target_.params()) out.push_back(p);
  for (auto* p : action_.params()) out.push_back(p);
  for (auto* p : state_.params()) out.push_back(p);
  if (belief_) {
    for (auto* p : belief_->params()) out.push_back(p);
  }
  return out;
}

template <typename T>
void ObserverModel<T>::zero_grads() {
  for (auto* p : params()) p->zero_grad();
}

template <typename T>
neural::CheckpointData ObserverModel<T>::to_checkpoint() const {
  neural::CheckpointData data;
  data.architecture = descriptor();
  auto* self = const_cast<ObserverModel<T>*>(this);
  for (auto* p : self->params()) {
    std::vector<float> values(p->w.begin(), p->w.end());
    data.arrays.emplace_back(p->name, std::move(values));
  }
  const auto add_buffer = [&](const std::string& name, std::vector<T>& buf) {
    data.arrays.emplace_back(name, std::vector<float>(buf.begin(), buf.end()));
  };
  int block_no = 1;
  for (auto* block : {&self->block1_, &self->block2_}) {
    const std::string base = "trunk.block" + std::to_string(block_no++);
    add_buffer(base + ".bn1.running_mean", block->bn1.running_mean());
    add_buffer(base + ".bn1.running_var", block->bn1.running_var());
    add_buffer(base + ".bn2.running_mean", block->bn2.running_mean());
    add_buffer(base + ".bn2.running_var", block->bn2.running_var());
  }
  return data;
}

template <typename T>
void ObserverModel<T>::load(const neural::CheckpointData& data) {
  if (data.architecture != descriptor()) {
    throw IntegrityError("checkpoint architecture '" + data.architecture +
                         "' does not match model '" + descriptor() + "'");
  }
  std::size_t idx = 0;
  const auto take = [&](const std::string& name,
                        std::size_t size) -> const std::vector<float>& {
    if (idx >= data.arrays.size()) {
      throw IntegrityError("checkpoint missing array '" + name + "'");
    }
    const auto& [n, values] = data.arrays[idx];
    if (n != name || values.size() != size) {
      throw IntegrityError("checkpoint array mismatch: wanted '" + name +
                           "' (" + std::to_string(size) + "), found '" + n +
                           "' (" + std::to_string(values.size()) + ")");
    }
    ++idx;
    return values;
  };
  for (auto* p : params()) {
    const auto& values = take(p->name, p->w.size());
    std::copy(values.begin(), values.end(), p->w.begin());
  }
  const auto load_buffer = [&](const std::string& name, std::vector<T>& buf) {
    const auto& values = take(name, buf.size());
    std::copy(values.begin(), values.end(), buf.begin());
  };
  int block_no = 1;
  for (auto* block : {&block1_, &block2_}) {
    const std::string base = "trunk.block" + std::to_string(block_no++);
    load_buffer(base + ".bn1.running_mean", block->bn1.running_mean());
    load_buffer(base + ".bn1.running_var", block->bn1.running_var());
    load_buffer(base + ".bn2.running_mean", block->bn2.running_mean());
    load_buffer(base + ".bn2.running_var", block->bn2.running_var());
  }
  if (idx != data.arrays.size()) {
    throw IntegrityError("checkpoint has unexpected extra arrays");
  }
}

template <typename T>
int predict_target(const T* target_logits, const ObjectSet& objects) {
  // Scan cells in ascending index order so equal logits resolve low.
  std::array<std::pair<int, int>, kObjectCount> cells;  // (cell, object)
  for (int i = 0; i < kObjectCount; ++i) {
    cells[i] = {objects.object(i).index(), i};
  }
  std::sort(cells.begin(), cells.end());
  int best_obj = cells[0].second;
  T best = target_logits[cells[0].first];
  for (int i = 1; i < kObjectCount; ++i) {
    const T v = target_logits[cells[i].first];
    if (v > best) {
      best = v;
      best_obj = cells[i].second;
    }
  }
  return best_obj;
}

template <typename T>
int argmax_row(const T* row, int k) {
  int best = 0;
  for (int i = 1; i < k; ++i) {
    if (row[i] > row[best]) best = i;
  }
  return best;
}

template class ObserverModel<float>;
template class ObserverModel<double>;
template int predict_target<float>(const float*, const ObjectSet&);
template int predict_target<double>(const double*, const ObjectSet&);
template int argmax_row<float>(const float*, int);
template int argmax_row<double>(const double*, int);

}  // namespace tomsyn
