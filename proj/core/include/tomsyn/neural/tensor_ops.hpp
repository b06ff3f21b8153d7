#pragma once

#include <cstdint>

namespace tomsyn::neural {

// Row-major matrix products. The `accumulate` flag switches C = A*B into
// C += A*B. Loop order is fixed, so results are bit-reproducible.
template <typename T>
void gemm_nn(const T* a, const T* b, T* c, int m, int k, int n,
             bool accumulate = false);
// C[m,n] (+)= A[m,k] * B[n,k]^T
template <typename T>
void gemm_nt(const T* a, const T* b, T* c, int m, int k, int n,
             bool accumulate = false);
// C[m,n] (+)= A[k,m]^T * B[k,n]
template <typename T>
void gemm_tn(const T* a, const T* b, T* c, int m, int k, int n,
             bool accumulate = false);

// 3x3 same-padding patch gather for channels-last images: every output
// pixel of every batch item becomes one row of 9*channels values.
// x: [n,h,w,c]  ->  col: [n*h*w, 9*c]
template <typename T>
void im2col3x3(const T* x, T* col, int n, int h, int w, int c);
// Scatter-add transpose of im2col3x3; dx must be zeroed by the caller.
template <typename T>
void col2im3x3(const T* col, T* dx, int n, int h, int w, int c);

// Numerically-safe softmax of one row (max subtraction, double accumulation).
template <typename T>
void softmax_row(const T* logits, T* out, int k);

}  // namespace tomsyn::neural
