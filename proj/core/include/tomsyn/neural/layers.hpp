#pragma once

#include <string>
#include <vector>

#include "tomsyn/neural/tensor.hpp"

namespace tomsyn {
class Rng;
}

namespace tomsyn::neural {

enum class Mode { Train, Eval };

// 3x3 same-padding or 1x1 convolution over channels-last images, stride 1.
// The 3x3 case runs as nine shifted matrix products over a zero-padded copy
// of each image, so the working set per image stays cache-sized instead of
// materializing the 9x patch matrix. backward() accumulates weight/bias
// gradients and, unless dx is null, the input gradient.
template <typename T>
class Conv2d {
 public:
  Conv2d(std::string name, int ksize, int in_ch, int out_ch);

  void init(Rng& rng);  // He-uniform weights, zero bias
  void forward(const T* x, T* y, int n, int h, int w);
  void backward(const T* x, const T* dy, T* dx, int n, int h, int w);

  std::vector<Param<T>*> params() { return {&w_, &b_}; }
  int in_channels() const { return in_ch_; }
  int out_channels() const { return out_ch_; }

 private:
  void ensure_pad_buffers(int n, int h, int w);

  int ksize_;
  int in_ch_;
  int out_ch_;
  Param<T> w_;  // [ksize*ksize*in_ch, out_ch]
  Param<T> b_;  // [out_ch]
  std::vector<T> xpad_;    // zero-ringed input copies from the last forward
  std::vector<T> ypad_;    // per-image padded output scratch
  std::vector<T> dypad_;   // zero-ringed upstream gradient scratch
  std::vector<T> dxpad_;   // per-image padded input-gradient scratch
  std::vector<T> wt_;      // per-offset transposed weights for the dx product
  int pad_n_ = 0;          // geometry the pad buffers were built for
  int pad_h_ = 0;
  int pad_w_ = 0;
};

// Per-channel batch normalization over all pixels of the batch. Train mode
// normalizes by batch statistics and (optionally) folds them into the
// running averages; eval mode uses the running averages.
template <typename T>
class BatchNorm {
 public:
  BatchNorm(std::string name, int channels, double momentum = 0.1,
            double eps = 1e-5);

  void forward(const T* x, T* y, int n, int spatial, Mode mode,
               bool update_running = true);
  void backward(const T* dy, T* dx, int n, int spatial);

  std::vector<Param<T>*> params() { return {&gamma_, &beta_}; }
  std::vector<T>& running_mean() { return running_mean_; }
  std::vector<T>& running_var() { return running_var_; }

 private:
  int channels_;
  double momentum_;
  double eps_;
  Param<T> gamma_;
  Param<T> beta_;
  std::vector<T> running_mean_;
  std::vector<T> running_var_;  // unbiased, like the usual framework contract
  std::vector<T> xhat_;         // caches for backward (train mode only)
  std::vector<T> invstd_;
  std::vector<double> acc_a_;  // per-channel accumulator scratch
  std::vector<double> acc_b_;
};

template <typename T>
class Linear {
 public:
  Linear(std::string name, int in_dim, int out_dim);

  void init(Rng& rng);
  void forward(const T* x, T* y, int n);
  void backward(const T* x, const T* dy, T* dx, int n);

  std::vector<Param<T>*> params() { return {&w_, &b_}; }

 private:
  int in_dim_;
  int out_dim_;
  Param<T> w_;  // [in_dim, out_dim]
  Param<T> b_;
  std::vector<T> wt_;  // scratch: transposed weights for the dx product
};

inline constexpr double kLeakySlope = 0.01;

// y = x for x >= 0, else slope*x. The backward form only needs y: the sign
// of the output determines which branch was taken.
template <typename T>
void leaky_relu_forward(const T* x, T* y, std::size_t size);
template <typename T>
void leaky_relu_backward(const T* y, const T* dy, T* dx, std::size_t size);

// [n, spatial, c] -> [n, c] mean over the spatial axis.
template <typename T>
void global_avg_pool_forward(const T* x, T* y, int n, int spatial, int c);
template <typename T>
void global_avg_pool_backward(const T* dy, T* dx, int n, int spatial, int c);

template <typename T>
void add_inplace(T* dst, const T* src, std::size_t size);

}  // namespace tomsyn::neural
