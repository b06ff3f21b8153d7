#include "tomsyn/neural/losses.hpp"

#include <cmath>
#include <vector>

#include "tomsyn/neural/tensor_ops.hpp"

namespace tomsyn::neural {

template <typename T>
double softmax_cross_entropy(const T* logits, const std::int32_t* labels,
                             int n, int k, T* dlogits, double scale) {
  std::vector<T> probs(static_cast<std::size_t>(k));
  const double inv_n = 1.0 / n;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const T* row = logits + static_cast<std::size_t>(i) * k;
    softmax_row(row, probs.data(), k);
    const int label = labels[i];
    total -= std::log(std::max(static_cast<double>(probs[label]), 1e-300));
    if (dlogits != nullptr) {
      T* drow = dlogits + static_cast<std::size_t>(i) * k;
      for (int j = 0; j < k; ++j) {
        drow[j] = static_cast<T>(scale * inv_n * probs[j]);
      }
      drow[label] -= static_cast<T>(scale * inv_n);
    }
  }
  return total * inv_n;
}

template <typename T, typename P>
double kl_divergence(const T* logits, const P* p, int n, int k, T* dlogits,
                     double scale) {
  std::vector<T> probs(static_cast<std::size_t>(k));
  const double inv_n = 1.0 / n;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const T* row = logits + static_cast<std::size_t>(i) * k;
    const P* prow = p + static_cast<std::size_t>(i) * k;
    softmax_row(row, probs.data(), k);
    double sum_p = 0.0;
    for (int j = 0; j < k; ++j) {
      const double pj = prow[j];
      sum_p += pj;
      if (pj > 0.0) {
        total += pj * (std::log(pj) -
                       std::log(std::max(static_cast<double>(probs[j]), 1e-300)));
      }
    }
    if (dlogits != nullptr) {
      T* drow = dlogits + static_cast<std::size_t>(i) * k;
      for (int j = 0; j < k; ++j) {
        drow[j] = static_cast<T>(
            scale * inv_n *
            (static_cast<double>(probs[j]) * sum_p - prow[j]));
      }
    }
  }
  return total * inv_n;
}

template double softmax_cross_entropy<float>(const float*, const std::int32_t*,
                                             int, int, float*, double);
template double softmax_cross_entropy<double>(const double*,
                                              const std::int32_t*, int, int,
                                              double*, double);
template double kl_divergence<float, float>(const float*, const float*, int,
                                            int, float*, double);
template double kl_divergence<double, double>(const double*, const double*,
                                              int, int, double*, double);
template double kl_divergence<double, float>(const double*, const float*, int,
                                             int, double*, double);

}  // namespace tomsyn::neural
