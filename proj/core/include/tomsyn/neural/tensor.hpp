#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

namespace tomsyn::neural {

// A learnable array plus its gradient accumulator. `decay` marks weight
// matrices: L1/L2 penalties touch only those, never biases or batch-norm
// affine parameters.
template <typename T>
struct Param {
  std::string name;
  std::vector<T> w;
  std::vector<T> g;
  bool decay = true;

  Param() = default;
  Param(std::string n, std::size_t size, bool apply_decay = true)
      : name(std::move(n)), w(size, T(0)), g(size, T(0)), decay(apply_decay) {}

  void zero_grad() { std::fill(g.begin(), g.end(), T(0)); }
};

// Minimal batch tensor: shape plus flat storage, channels-last.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> values;
  std::vector<T> grad;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    values.assign(static_cast<std::size_t>(count(shape)), T(0));
    grad.assign(values.size(), T(0));
  }

  static long long count(const std::vector<int>& s) {
    return std::accumulate(s.begin(), s.end(), 1LL,
                           [](long long a, int b) { return a * b; });
  }
  std::size_t size() const { return values.size(); }
};

}  // namespace tomsyn::neural
