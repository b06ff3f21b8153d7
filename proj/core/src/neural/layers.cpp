#include "tomsyn/neural/layers.hpp"

#include <cmath>
#include <cstring>

#include "tomsyn/error.hpp"
#include "tomsyn/neural/tensor_ops.hpp"
#include "tomsyn/random.hpp"

namespace tomsyn::neural {

template <typename T>
Conv2d<T>::Conv2d(std::string name, int ksize, int in_ch, int out_ch)
    : ksize_(ksize),
      in_ch_(in_ch),
      out_ch_(out_ch),
      w_(name + ".w",
         static_cast<std::size_t>(ksize * ksize * in_ch) * out_ch, true),
      b_(name + ".b", static_cast<std::size_t>(out_ch), false) {
  if (ksize != 1 && ksize != 3) {
    throw UsageError("Conv2d supports kernel sizes 1 and 3");
  }
}

template <typename T>
void Conv2d<T>::init(Rng& rng) {
  const double fan_in = static_cast<double>(ksize_) * ksize_ * in_ch_;
  const double limit = std::sqrt(6.0 / fan_in);
  for (T& v : w_.w) {
    v = static_cast<T>((2.0 * rng.next_double() - 1.0) * limit);
  }
}

template <typename T>
void Conv2d<T>::ensure_pad_buffers(int n, int h, int w) {
  if (n <= pad_n_ && h == pad_h_ && w == pad_w_) return;
  const std::size_t pimg = static_cast<std::size_t>(h + 2) * (w + 2);
  // assign() zeroes the rings once; the per-image copies below only ever
  // touch the interior, so the zero padding persists across calls.
  xpad_.assign(static_cast<std::size_t>(n) * pimg * in_ch_, T(0));
  ypad_.resize(pimg * out_ch_);
  dypad_.assign(pimg * out_ch_, T(0));
  dxpad_.resize(pimg * in_ch_);
  pad_n_ = n;
  pad_h_ = h;
  pad_w_ = w;
}

template <typename T>
void Conv2d<T>::forward(const T* x, T* y, int n, int h, int w) {
  const int pixels = n * h * w;
  if (ksize_ == 1) {
    gemm_nn(x, w_.w.data(), y, pixels, in_ch_, out_ch_);
  } else {
    ensure_pad_buffers(n, h, w);
    const int pw = w + 2;
    const std::size_t pimg = static_cast<std::size_t>(h + 2) * pw;
    const int p0 = pw + 1;                // first interior cell, padded index
    const int m = (h - 1) * pw + w;       // contiguous run of interior cells
    for (int b = 0; b < n; ++b) {
      T* xp = xpad_.data() + static_cast<std::size_t>(b) * pimg * in_ch_;
      const T* xi = x + static_cast<std::size_t>(b) * h * w * in_ch_;
      for (int r = 0; r < h; ++r) {
        std::memcpy(xp + (static_cast<std::size_t>(r + 1) * pw + 1) * in_ch_,
                    xi + static_cast<std::size_t>(r) * w * in_ch_,
                    sizeof(T) * static_cast<std::size_t>(w) * in_ch_);
      }
      int idx = 0;
      for (int kr = -1; kr <= 1; ++kr) {
        for (int kc = -1; kc <= 1; ++kc, ++idx) {
          const int d = kr * pw + kc;
          gemm_nn(xp + static_cast<std::size_t>(p0 + d) * in_ch_,
                  w_.w.data() + static_cast<std::size_t>(idx) * in_ch_ *
                                    out_ch_,
                  ypad_.data() + static_cast<std::size_t>(p0) * out_ch_, m,
                  in_ch_, out_ch_, /*accumulate=*/idx > 0);
        }
      }
      T* yi = y + static_cast<std::size_t>(b) * h * w * out_ch_;
      for (int r = 0; r < h; ++r) {
        std::memcpy(yi + static_cast<std::size_t>(r) * w * out_ch_,
                    ypad_.data() +
                        (static_cast<std::size_t>(r + 1) * pw + 1) * out_ch_,
                    sizeof(T) * static_cast<std::size_t>(w) * out_ch_);
      }
    }
  }
  for (int p = 0; p < pixels; ++p) {
    T* yp = y + static_cast<std::size_t>(p) * out_ch_;
    for (int j = 0; j < out_ch_; ++j) yp[j] += b_.w[j];
  }
}

template <typename T>
void Conv2d<T>::backward(const T* x, const T* dy, T* dx, int n, int h, int w) {
  const int pixels = n * h * w;
  for (int p = 0; p < pixels; ++p) {
    const T* dyp = dy + static_cast<std::size_t>(p) * out_ch_;
    for (int j = 0; j < out_ch_; ++j) b_.g[j] += dyp[j];
  }

  if (ksize_ == 1) {
    gemm_tn(x, dy, w_.g.data(), in_ch_, pixels, out_ch_, /*accumulate=*/true);
    if (dx == nullptr) return;
    wt_.resize(static_cast<std::size_t>(out_ch_) * in_ch_);
    for (int p = 0; p < in_ch_; ++p) {
      for (int j = 0; j < out_ch_; ++j) {
        wt_[static_cast<std::size_t>(j) * in_ch_ + p] =
            w_.w[static_cast<std::size_t>(p) * out_ch_ + j];
      }
    }
    gemm_nn(dy, wt_.data(), dx, pixels, out_ch_, in_ch_);
    return;
  }

  const int pw = w + 2;
  const std::size_t pimg = static_cast<std::size_t>(h + 2) * pw;
  const int p0 = pw + 1;
  const int m = (h - 1) * pw + w;
  if (dx != nullptr) {
    // Per-offset transposed weight slices for the dx products.
    wt_.resize(static_cast<std::size_t>(9) * out_ch_ * in_ch_);
    for (int idx = 0; idx < 9; ++idx) {
      const T* ws =
          w_.w.data() + static_cast<std::size_t>(idx) * in_ch_ * out_ch_;
      T* wts = wt_.data() + static_cast<std::size_t>(idx) * out_ch_ * in_ch_;
      for (int p = 0; p < in_ch_; ++p) {
        for (int j = 0; j < out_ch_; ++j) {
          wts[static_cast<std::size_t>(j) * in_ch_ + p] =
              ws[static_cast<std::size_t>(p) * out_ch_ + j];
        }
      }
    }
  }
  for (int b = 0; b < n; ++b) {
    const T* xp = xpad_.data() + static_cast<std::size_t>(b) * pimg * in_ch_;
    const T* dyi = dy + static_cast<std::size_t>(b) * h * w * out_ch_;
    for (int r = 0; r < h; ++r) {
      std::memcpy(
          dypad_.data() + (static_cast<std::size_t>(r + 1) * pw + 1) * out_ch_,
          dyi + static_cast<std::size_t>(r) * w * out_ch_,
          sizeof(T) * static_cast<std::size_t>(w) * out_ch_);
    }
    int idx = 0;
    for (int kr = -1; kr <= 1; ++kr) {
      for (int kc = -1; kc <= 1; ++kc, ++idx) {
        const int d = kr * pw + kc;
        // The zero ring of dypad kills every out-of-image contribution, so
        // both products can run over the full contiguous interior range.
        gemm_tn(xp + static_cast<std::size_t>(p0 + d) * in_ch_,
                dypad_.data() + static_cast<std::size_t>(p0) * out_ch_,
                w_.g.data() + static_cast<std::size_t>(idx) * in_ch_ * out_ch_,
                in_ch_, m, out_ch_, /*accumulate=*/true);
        if (dx != nullptr) {
          gemm_nn(dypad_.data() + static_cast<std::size_t>(p0 - d) * out_ch_,
                  wt_.data() + static_cast<std::size_t>(idx) * out_ch_ *
                                   in_ch_,
                  dxpad_.data() + static_cast<std::size_t>(p0) * in_ch_, m,
                  out_ch_, in_ch_, /*accumulate=*/idx > 0);
        }
      }
    }
    if (dx != nullptr) {
      T* dxi = dx + static_cast<std::size_t>(b) * h * w * in_ch_;
      for (int r = 0; r < h; ++r) {
        std::memcpy(dxi + static_cast<std::size_t>(r) * w * in_ch_,
                    dxpad_.data() +
                        (static_cast<std::size_t>(r + 1) * pw + 1) * in_ch_,
                    sizeof(T) * static_cast<std::size_t>(w) * in_ch_);
      }
    }
  }
}

template <typename T>
BatchNorm<T>::BatchNorm(std::string name, int channels, double momentum,
                        double eps)
    : channels_(channels),
      momentum_(momentum),
      eps_(eps),
      gamma_(name + ".gamma", static_cast<std::size_t>(channels), false),
      beta_(name + ".beta", static_cast<std::size_t>(channels), false),
      running_mean_(static_cast<std::size_t>(channels), T(0)),
      running_var_(static_cast<std::size_t>(channels), T(1)) {
  std::fill(gamma_.w.begin(), gamma_.w.end(), T(1));
}

// All loops walk rows (channels contiguous) so the buffer streams through
// cache once per pass instead of once per channel.
template <typename T>
void BatchNorm<T>::forward(const T* x, T* y, int n, int spatial, Mode mode,
                           bool update_running) {
  const std::size_t rows = static_cast<std::size_t>(n) * spatial;
  const int ch = channels_;
  if (mode == Mode::Eval) {
    acc_a_.resize(static_cast<std::size_t>(ch));
    acc_b_.resize(static_cast<std::size_t>(ch));
    for (int c = 0; c < ch; ++c) {
      acc_a_[c] = gamma_.w[c] /
                  std::sqrt(static_cast<double>(running_var_[c]) + eps_);
      acc_b_[c] = beta_.w[c] - running_mean_[c] * acc_a_[c];
    }
    for (std::size_t r = 0; r < rows; ++r) {
      const T* xr = x + r * ch;
      T* yr = y + r * ch;
#pragma omp simd
      for (int c = 0; c < ch; ++c) {
        yr[c] = static_cast<T>(xr[c] * acc_a_[c] + acc_b_[c]);
      }
    }
    return;
  }

  if (n < 2 && spatial < 2) {
    throw NumericalError("batch norm needs more than one value per channel "
                         "in train mode");
  }
  xhat_.resize(rows * ch);
  invstd_.resize(static_cast<std::size_t>(ch));
  const double inv_m = 1.0 / static_cast<double>(rows);
  acc_a_.assign(static_cast<std::size_t>(ch), 0.0);
  acc_b_.assign(static_cast<std::size_t>(ch), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x + r * ch;
#pragma omp simd
    for (int c = 0; c < ch; ++c) acc_a_[c] += xr[c];
  }
  for (int c = 0; c < ch; ++c) acc_a_[c] *= inv_m;  // now the channel means
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x + r * ch;
#pragma omp simd
    for (int c = 0; c < ch; ++c) {
      const double d = xr[c] - acc_a_[c];
      acc_b_[c] += d * d;
    }
  }
  for (int c = 0; c < ch; ++c) {
    const double var = acc_b_[c] * inv_m;  // biased, used for normalization
    invstd_[c] = static_cast<T>(1.0 / std::sqrt(var + eps_));
    if (update_running) {
      const double unbiased =
          rows > 1 ? acc_b_[c] / static_cast<double>(rows - 1) : var;
      running_mean_[c] = static_cast<T>((1.0 - momentum_) * running_mean_[c] +
                                        momentum_ * acc_a_[c]);
      running_var_[c] = static_cast<T>((1.0 - momentum_) * running_var_[c] +
                                       momentum_ * unbiased);
    }
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x + r * ch;
    T* xhr = xhat_.data() + r * ch;
    T* yr = y + r * ch;
#pragma omp simd
    for (int c = 0; c < ch; ++c) {
      const T xh = static_cast<T>((xr[c] - acc_a_[c]) * invstd_[c]);
      xhr[c] = xh;
      yr[c] = gamma_.w[c] * xh + beta_.w[c];
    }
  }
}

template <typename T>
void BatchNorm<T>::backward(const T* dy, T* dx, int n, int spatial) {
  const std::size_t rows = static_cast<std::size_t>(n) * spatial;
  const int ch = channels_;
  const double inv_m = 1.0 / static_cast<double>(rows);
  acc_a_.assign(static_cast<std::size_t>(ch), 0.0);  // sum dy
  acc_b_.assign(static_cast<std::size_t>(ch), 0.0);  // sum dy * xhat
  for (std::size_t r = 0; r < rows; ++r) {
    const T* dyr = dy + r * ch;
    const T* xhr = xhat_.data() + r * ch;
#pragma omp simd
    for (int c = 0; c < ch; ++c) {
      acc_a_[c] += dyr[c];
      acc_b_[c] += static_cast<double>(dyr[c]) * xhr[c];
    }
  }
  for (int c = 0; c < ch; ++c) {
    gamma_.g[c] += static_cast<T>(acc_b_[c]);
    beta_.g[c] += static_cast<T>(acc_a_[c]);
    acc_a_[c] *= inv_m;
    acc_b_[c] *= inv_m;
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const T* dyr = dy + r * ch;
    const T* xhr = xhat_.data() + r * ch;
    T* dxr = dx + r * ch;
#pragma omp simd
    for (int c = 0; c < ch; ++c) {
      const double scale = gamma_.w[c] * static_cast<double>(invstd_[c]);
      dxr[c] = static_cast<T>(scale * (dyr[c] - acc_a_[c] - xhr[c] * acc_b_[c]));
    }
  }
}

template <typename T>
Linear<T>::Linear(std::string name, int in_dim, int out_dim)
    : in_dim_(in_dim),
      out_dim_(out_dim),
      w_(name + ".w", static_cast<std::size_t>(in_dim) * out_dim, true),
      b_(name + ".b", static_cast<std::size_t>(out_dim), false) {}

template <typename T>
void Linear<T>::init(Rng& rng) {
  const double limit = std::sqrt(6.0 / in_dim_);
  for (T& v : w_.w) {
    v = static_cast<T>((2.0 * rng.next_double() - 1.0) * limit);
  }
}

template <typename T>
void Linear<T>::forward(const T* x, T* y, int n) {
  gemm_nn(x, w_.w.data(), y, n, in_dim_, out_dim_);
  for (int i = 0; i < n; ++i) {
    T* yi = y + static_cast<std::size_t>(i) * out_dim_;
    for (int j = 0; j < out_dim_; ++j) yi[j] += b_.w[j];
  }
}

template <typename T>
void Linear<T>::backward(const T* x, const T* dy, T* dx, int n) {
  gemm_tn(x, dy, w_.g.data(), in_dim_, n, out_dim_, /*accumulate=*/true);
  for (int i = 0; i < n; ++i) {
    const T* dyi = dy + static_cast<std::size_t>(i) * out_dim_;
    for (int j = 0; j < out_dim_; ++j) b_.g[j] += dyi[j];
  }
  if (dx != nullptr) {
    wt_.resize(static_cast<std::size_t>(out_dim_) * in_dim_);
    for (int p = 0; p < in_dim_; ++p) {
      for (int j = 0; j < out_dim_; ++j) {
        wt_[static_cast<std::size_t>(j) * in_dim_ + p] =
            w_.w[static_cast<std::size_t>(p) * out_dim_ + j];
      }
    }
    gemm_nn(dy, wt_.data(), dx, n, out_dim_, in_dim_);
  }
}

template <typename T>
void leaky_relu_forward(const T* x, T* y, std::size_t size) {
  const T slope = static_cast<T>(kLeakySlope);
  for (std::size_t i = 0; i < size; ++i) {
    y[i] = x[i] >= T(0) ? x[i] : slope * x[i];
  }
}

template <typename T>
void leaky_relu_backward(const T* y, const T* dy, T* dx, std::size_t size) {
  const T slope = static_cast<T>(kLeakySlope);
  for (std::size_t i = 0; i < size; ++i) {
    dx[i] = y[i] >= T(0) ? dy[i] : slope * dy[i];
  }
}

template <typename T>
void global_avg_pool_forward(const T* x, T* y, int n, int spatial, int c) {
  const double inv = 1.0 / spatial;
  for (int i = 0; i < n; ++i) {
    const T* xi = x + static_cast<std::size_t>(i) * spatial * c;
    T* yi = y + static_cast<std::size_t>(i) * c;
    for (int ch = 0; ch < c; ++ch) {
      double sum = 0.0;
      for (int s = 0; s < spatial; ++s) sum += xi[s * c + ch];
      yi[ch] = static_cast<T>(sum * inv);
    }
  }
}

template <typename T>
void global_avg_pool_backward(const T* dy, T* dx, int n, int spatial, int c) {
  const T inv = static_cast<T>(1.0 / spatial);
  for (int i = 0; i < n; ++i) {
    const T* dyi = dy + static_cast<std::size_t>(i) * c;
    T* dxi = dx + static_cast<std::size_t>(i) * spatial * c;
    for (int s = 0; s < spatial; ++s) {
      for (int ch = 0; ch < c; ++ch) dxi[s * c + ch] = dyi[ch] * inv;
    }
  }
}

template <typename T>
void add_inplace(T* dst, const T* src, std::size_t size) {
#pragma omp simd
  for (std::size_t i = 0; i < size; ++i) dst[i] += src[i];
}

template class Conv2d<float>;
template class Conv2d<double>;
template class BatchNorm<float>;
template class BatchNorm<double>;
template class Linear<float>;
template class Linear<double>;
template void leaky_relu_forward<float>(const float*, float*, std::size_t);
template void leaky_relu_forward<double>(const double*, double*, std::size_t);
template void leaky_relu_backward<float>(const float*, const float*, float*,
                                         std::size_t);
template void leaky_relu_backward<double>(const double*, const double*,
                                          double*, std::size_t);
template void global_avg_pool_forward<float>(const float*, float*, int, int,
                                             int);
template void global_avg_pool_forward<double>(const double*, double*, int,
                                              int, int);
template void global_avg_pool_backward<float>(const float*, float*, int, int,
                                              int);
template void global_avg_pool_backward<double>(const double*, double*, int,
                                               int, int);
template void add_inplace<float>(float*, const float*, std::size_t);
template void add_inplace<double>(double*, const double*, std::size_t);

}  // namespace tomsyn::neural
