#include "tomsyn/neural/tensor_ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace tomsyn::neural {

// Register-tiled kernel for the full-width column strips of gemm_nn: a
// 4-row by 32-column block of C stays in vector registers across the whole
// k loop, so each step is two B loads, four broadcasts and eight FMAs.
// `ks` is the row stride of A (the full k of the original product when the
// k dimension is processed in chunks).
template <typename T>
void gemm_nn_tile4(const T* __restrict a, const T* __restrict b,
                   T* __restrict c, int kl, int ks, int n, int jb,
                   bool accumulate) {
  constexpr int kJt = 32;
  T acc0[kJt], acc1[kJt], acc2[kJt], acc3[kJt];
  T* rows[4] = {c + jb, c + n + jb, c + 2 * static_cast<std::size_t>(n) + jb,
                c + 3 * static_cast<std::size_t>(n) + jb};
  if (accumulate) {
    for (int j = 0; j < kJt; ++j) {
      acc0[j] = rows[0][j];
      acc1[j] = rows[1][j];
      acc2[j] = rows[2][j];
      acc3[j] = rows[3][j];
    }
  } else {
    std::fill(acc0, acc0 + kJt, T(0));
    std::fill(acc1, acc1 + kJt, T(0));
    std::fill(acc2, acc2 + kJt, T(0));
    std::fill(acc3, acc3 + kJt, T(0));
  }
  for (int p = 0; p < kl; ++p) {
    const T* __restrict bp = b + static_cast<std::size_t>(p) * n + jb;
    const T a0 = a[p];
    const T a1 = a[ks + p];
    const T a2 = a[2 * static_cast<std::size_t>(ks) + p];
    const T a3 = a[3 * static_cast<std::size_t>(ks) + p];
#pragma omp simd
    for (int j = 0; j < kJt; ++j) {
      acc0[j] += a0 * bp[j];
      acc1[j] += a1 * bp[j];
      acc2[j] += a2 * bp[j];
      acc3[j] += a3 * bp[j];
    }
  }
  for (int j = 0; j < kJt; ++j) {
    rows[0][j] = acc0[j];
    rows[1][j] = acc1[j];
    rows[2][j] = acc2[j];
    rows[3][j] = acc3[j];
  }
}

// One C row, JL columns, JL known at compile time so narrow strips still
// vectorize. Four accumulator sets break the FMA dependency chain.
template <typename T, int JL>
void gemm_nn_edge1(const T* __restrict a, const T* __restrict b,
                   T* __restrict c, int kl, int n, bool accumulate) {
  T q0[JL] = {}, q1[JL] = {}, q2[JL] = {}, q3[JL] = {};
  int p = 0;
  for (; p + 4 <= kl; p += 4) {
    const T a0 = a[p];
    const T a1 = a[p + 1];
    const T a2 = a[p + 2];
    const T a3 = a[p + 3];
    const T* __restrict b0 = b + static_cast<std::size_t>(p) * n;
    const T* __restrict b1 = b0 + n;
    const T* __restrict b2 = b1 + n;
    const T* __restrict b3 = b2 + n;
#pragma omp simd
    for (int j = 0; j < JL; ++j) {
      q0[j] += a0 * b0[j];
      q1[j] += a1 * b1[j];
      q2[j] += a2 * b2[j];
      q3[j] += a3 * b3[j];
    }
  }
  for (; p < kl; ++p) {
    const T apk = a[p];
    const T* __restrict bp = b + static_cast<std::size_t>(p) * n;
#pragma omp simd
    for (int j = 0; j < JL; ++j) q0[j] += apk * bp[j];
  }
  if (accumulate) {
    for (int j = 0; j < JL; ++j) c[j] += (q0[j] + q1[j]) + (q2[j] + q3[j]);
  } else {
    for (int j = 0; j < JL; ++j) c[j] = (q0[j] + q1[j]) + (q2[j] + q3[j]);
  }
}

// Ragged column strip [jb, jb+jl): peel 16-wide pieces, then one fixed-width
// kernel for the remainder.
template <typename T>
void gemm_nn_edge(const T* a, const T* b, T* c, int m, int kl, int ks, int n,
                  int jb, int jl, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    const T* ai = a + static_cast<std::size_t>(i) * ks;
    T* ci = c + static_cast<std::size_t>(i) * n;
    int j0 = jb;
    int rem = jl;
    while (rem >= 16) {
      gemm_nn_edge1<T, 16>(ai, b + j0, ci + j0, kl, n, accumulate);
      j0 += 16;
      rem -= 16;
    }
    switch (rem) {
      case 0: break;
      case 1: gemm_nn_edge1<T, 1>(ai, b + j0, ci + j0, kl, n, accumulate); break;
      case 2: gemm_nn_edge1<T, 2>(ai, b + j0, ci + j0, kl, n, accumulate); break;
      case 3: gemm_nn_edge1<T, 3>(ai, b + j0, ci + j0, kl, n, accumulate); break;
      case 4: gemm_nn_edge1<T, 4>(ai, b + j0, ci + j0, kl, n, accumulate); break;
      case 5: gemm_nn_edge1<T, 5>(ai, b + j0, ci + j0, kl, n, accumulate); break;
      case 6: gemm_nn_edge1<T, 6>(ai, b + j0, ci + j0, kl, n, accumulate); break;
      case 7: gemm_nn_edge1<T, 7>(ai, b + j0, ci + j0, kl, n, accumulate); break;
      case 8: gemm_nn_edge1<T, 8>(ai, b + j0, ci + j0, kl, n, accumulate); break;
      case 9: gemm_nn_edge1<T, 9>(ai, b + j0, ci + j0, kl, n, accumulate); break;
      case 10:
        gemm_nn_edge1<T, 10>(ai, b + j0, ci + j0, kl, n, accumulate);
        break;
      case 11:
        gemm_nn_edge1<T, 11>(ai, b + j0, ci + j0, kl, n, accumulate);
        break;
      case 12:
        gemm_nn_edge1<T, 12>(ai, b + j0, ci + j0, kl, n, accumulate);
        break;
      case 13:
        gemm_nn_edge1<T, 13>(ai, b + j0, ci + j0, kl, n, accumulate);
        break;
      case 14:
        gemm_nn_edge1<T, 14>(ai, b + j0, ci + j0, kl, n, accumulate);
        break;
      default:
        gemm_nn_edge1<T, 15>(ai, b + j0, ci + j0, kl, n, accumulate);
        break;
    }
  }
}

template <typename T>
void gemm_nn_block(const T* a, const T* b, T* c, int m, int kl, int ks, int n,
                   bool accumulate) {
  constexpr int kJt = 32;
  const int j_main = n - n % kJt;
  for (int jb = 0; jb < j_main; jb += kJt) {
    const int i_main = m - m % 4;
    for (int ib = 0; ib < i_main; ib += 4) {
      gemm_nn_tile4(a + static_cast<std::size_t>(ib) * ks, b,
                    c + static_cast<std::size_t>(ib) * n, kl, ks, n, jb,
                    accumulate);
    }
    if (i_main < m) {
      gemm_nn_edge(a + static_cast<std::size_t>(i_main) * ks, b,
                   c + static_cast<std::size_t>(i_main) * n, m - i_main, kl,
                   ks, n, jb, kJt, accumulate);
    }
  }
  if (j_main < n) {
    gemm_nn_edge(a, b, c, m, kl, ks, n, j_main, n - j_main, accumulate);
  }
}

template <typename T>
void gemm_nn(const T* a, const T* b, T* c, int m, int k, int n,
             bool accumulate) {
  // Chunk the k dimension so the active B slab stays cache-resident for
  // large inner dimensions (the flattened fully-connected layers).
  constexpr int kKc = 1024;
  for (int kb = 0; kb < k; kb += kKc) {
    const int kl = std::min(kKc, k - kb);
    gemm_nn_block(a + kb, b + static_cast<std::size_t>(kb) * n, c, m, kl, k,
                  n, accumulate || kb > 0);
  }
}

template <typename T>
void gemm_nt(const T* a, const T* b, T* c, int m, int k, int n,
             bool accumulate) {
  for (int i = 0; i < m; ++i) {
    const T* ai = a + static_cast<std::size_t>(i) * k;
    T* ci = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const T* bj = b + static_cast<std::size_t>(j) * k;
      T sum = T(0);
#pragma omp simd reduction(+ : sum)
      for (int p = 0; p < k; ++p) sum += ai[p] * bj[p];
      ci[j] = accumulate ? ci[j] + sum : sum;
    }
  }
}

// Eight C rows held in registers across the whole k loop; A is k-major here
// (eight consecutive scalars per k step), B streams row by row.
template <typename T, int JL>
void gemm_tn_tile8(const T* __restrict a, const T* __restrict b,
                   T* __restrict c, int m, int k, int n) {
  T acc[8][JL];
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < JL; ++j) acc[i][j] = T(0);
  }
  for (int p = 0; p < k; ++p) {
    const T* __restrict ap = a + static_cast<std::size_t>(p) * m;
    const T* __restrict bp = b + static_cast<std::size_t>(p) * n;
#pragma omp simd
    for (int j = 0; j < JL; ++j) {
      acc[0][j] += ap[0] * bp[j];
      acc[1][j] += ap[1] * bp[j];
      acc[2][j] += ap[2] * bp[j];
      acc[3][j] += ap[3] * bp[j];
      acc[4][j] += ap[4] * bp[j];
      acc[5][j] += ap[5] * bp[j];
      acc[6][j] += ap[6] * bp[j];
      acc[7][j] += ap[7] * bp[j];
    }
  }
  for (int i = 0; i < 8; ++i) {
    T* ci = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < JL; ++j) ci[j] += acc[i][j];
  }
}

// Bundle four k-rows per pass so each C row is touched once per bundle
// instead of once per row; used for the ragged edges of gemm_tn.
template <typename T>
void gemm_tn_edge(const T* a, const T* b, T* c, int i0, int m, int k, int n) {
  const int k_main = k - k % 4;
  for (int p = 0; p < k_main; p += 4) {
    const T* a0 = a + static_cast<std::size_t>(p) * m;
    const T* a1 = a0 + m;
    const T* a2 = a1 + m;
    const T* a3 = a2 + m;
    const T* b0 = b + static_cast<std::size_t>(p) * n;
    const T* b1 = b0 + n;
    const T* b2 = b1 + n;
    const T* b3 = b2 + n;
    for (int i = i0; i < m; ++i) {
      const T w0 = a0[i];
      const T w1 = a1[i];
      const T w2 = a2[i];
      const T w3 = a3[i];
      if (w0 == T(0) && w1 == T(0) && w2 == T(0) && w3 == T(0)) continue;
      T* ci = c + static_cast<std::size_t>(i) * n;
#pragma omp simd
      for (int j = 0; j < n; ++j) {
        ci[j] += w0 * b0[j] + w1 * b1[j] + w2 * b2[j] + w3 * b3[j];
      }
    }
  }
  for (int p = k_main; p < k; ++p) {
    const T* ap = a + static_cast<std::size_t>(p) * m;
    const T* bp = b + static_cast<std::size_t>(p) * n;
    for (int i = i0; i < m; ++i) {
      const T api = ap[i];
      if (api == T(0)) continue;
      T* ci = c + static_cast<std::size_t>(i) * n;
#pragma omp simd
      for (int j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

// For short k (the batch dimension of a dense layer's weight gradient) and a
// tall C: stream each C row exactly once with the whole k reduction inline.
template <typename T>
void gemm_tn_kinner(const T* a, const T* b, T* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    T* __restrict ci = c + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const T api = a[static_cast<std::size_t>(p) * m + i];
      if (api == T(0)) continue;
      const T* __restrict bp = b + static_cast<std::size_t>(p) * n;
#pragma omp simd
      for (int j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

template <typename T>
void gemm_tn(const T* a, const T* b, T* c, int m, int k, int n,
             bool accumulate) {
  if (!accumulate) {
    std::fill(c, c + static_cast<std::size_t>(m) * n, T(0));
  }
  if (k <= 64 && m >= 256) {
    gemm_tn_kinner(a, b, c, m, k, n);
    return;
  }
  int i_main = 0;
  if (n == 32) {
    for (; i_main + 8 <= m; i_main += 8) {
      gemm_tn_tile8<T, 32>(a + i_main, b, c + static_cast<std::size_t>(i_main) * n,
                           m, k, n);
    }
  } else if (n == 16) {
    for (; i_main + 8 <= m; i_main += 8) {
      gemm_tn_tile8<T, 16>(a + i_main, b, c + static_cast<std::size_t>(i_main) * n,
                           m, k, n);
    }
  }
  if (i_main < m) gemm_tn_edge(a, b, c, i_main, m, k, n);
}

template <typename T>
void im2col3x3(const T* x, T* col, int n, int h, int w, int c) {
  T* out = col;
  for (int b = 0; b < n; ++b) {
    const T* img = x + static_cast<std::size_t>(b) * h * w * c;
    for (int r = 0; r < h; ++r) {
      for (int cc = 0; cc < w; ++cc) {
        for (int kr = -1; kr <= 1; ++kr) {
          const int sr = r + kr;
          for (int kc = -1; kc <= 1; ++kc) {
            const int sc = cc + kc;
            if (sr < 0 || sr >= h || sc < 0 || sc >= w) {
              std::fill(out, out + c, T(0));
            } else {
              std::memcpy(out, img + (static_cast<std::size_t>(sr) * w + sc) * c,
                          sizeof(T) * static_cast<std::size_t>(c));
            }
            out += c;
          }
        }
      }
    }
  }
}

template <typename T>
void col2im3x3(const T* col, T* dx, int n, int h, int w, int c) {
  const T* in = col;
  for (int b = 0; b < n; ++b) {
    T* img = dx + static_cast<std::size_t>(b) * h * w * c;
    for (int r = 0; r < h; ++r) {
      for (int cc = 0; cc < w; ++cc) {
        for (int kr = -1; kr <= 1; ++kr) {
          const int sr = r + kr;
          for (int kc = -1; kc <= 1; ++kc) {
            const int sc = cc + kc;
            if (sr >= 0 && sr < h && sc >= 0 && sc < w) {
              T* dst = img + (static_cast<std::size_t>(sr) * w + sc) * c;
              for (int ch = 0; ch < c; ++ch) dst[ch] += in[ch];
            }
            in += c;
          }
        }
      }
    }
  }
}

template <typename T>
void softmax_row(const T* logits, T* out, int k) {
  T mx = logits[0];
  for (int i = 1; i < k; ++i) mx = std::max(mx, logits[i]);
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    const double e = std::exp(static_cast<double>(logits[i] - mx));
    out[i] = static_cast<T>(e);
    sum += e;
  }
  const double inv = 1.0 / sum;
  for (int i = 0; i < k; ++i) out[i] = static_cast<T>(out[i] * inv);
}

template void gemm_nn<float>(const float*, const float*, float*, int, int,
                             int, bool);
template void gemm_nn<double>(const double*, const double*, double*, int, int,
                              int, bool);
template void gemm_nt<float>(const float*, const float*, float*, int, int,
                             int, bool);
template void gemm_nt<double>(const double*, const double*, double*, int, int,
                              int, bool);
template void gemm_tn<float>(const float*, const float*, float*, int, int,
                             int, bool);
template void gemm_tn<double>(const double*, const double*, double*, int, int,
                              int, bool);
template void im2col3x3<float>(const float*, float*, int, int, int, int);
template void im2col3x3<double>(const double*, double*, int, int, int, int);
template void col2im3x3<float>(const float*, float*, int, int, int, int);
template void col2im3x3<double>(const double*, double*, int, int, int, int);
template void softmax_row<float>(const float*, float*, int);
template void softmax_row<double>(const double*, double*, int);

}  // namespace tomsyn::neural
