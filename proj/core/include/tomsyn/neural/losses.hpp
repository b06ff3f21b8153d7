#pragma once

#include <cstdint>

namespace tomsyn::neural {

// Batched softmax cross-entropy from logits. Returns the mean loss over the
// batch (accumulated in double). When dlogits is non-null it receives
// scale * (softmax - onehot) / n, i.e. the gradient of scale * mean-loss.
template <typename T>
double softmax_cross_entropy(const T* logits, const std::int32_t* labels,
                             int n, int k, T* dlogits, double scale = 1.0);

// Batched KL(p || softmax(logits)), 0*log 0 taken as 0. Mean over batch;
// dlogits (when non-null) receives scale * (softmax * sum(p) - p) / n.
template <typename T, typename P>
double kl_divergence(const T* logits, const P* p, int n, int k, T* dlogits,
                     double scale = 1.0);

}  // namespace tomsyn::neural
