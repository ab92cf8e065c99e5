#pragma once

#include <vector>

#include "racnn/tensor.hpp"

namespace racnn {

// Differentiable operators. Passing a Graph records the op for backward;
// with tape == nullptr the call runs in inference mode.

// Cross-correlation with zero padding. input [N,C,H,W], weight [K,C,fh,fw]
// (fh, fw odd), bias [K]. pad = (f-1)/2 preserves the spatial dims.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int64_t pad, Graph* tape = nullptr);

// Elementwise max(0, x); derivative at 0 is 0.
Tensor relu(const Tensor& input, Graph* tape = nullptr);

// Window max over non-overlapping-or-strided k x k windows. Gradient routes
// to the first-encountered argmax in row-major scan order.
Tensor maxpool2d(const Tensor& input, int64_t k, int64_t stride,
                 Graph* tape = nullptr);

// Affine map: input [N,D] * weight [M,D]^T + bias [M] -> [N,M].
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias,
              Graph* tape = nullptr);

// Elementwise sum of equal-shaped tensors.
Tensor add(const Tensor& a, const Tensor& b, Graph* tape = nullptr);

// Elementwise product of equal-shaped tensors.
Tensor mul(const Tensor& a, const Tensor& b, Graph* tape = nullptr);

// Sum of all elements -> scalar.
Tensor sum(const Tensor& input, Graph* tape = nullptr);

// Copying reshape to the same number of elements.
Tensor reshape(const Tensor& input, std::vector<int64_t> shape,
               Graph* tape = nullptr);

// 0.5 * mean of squared elementwise differences.
Tensor mse_loss(const Tensor& pred, const Tensor& target, Graph* tape = nullptr);

// Mean over the batch of -log softmax(logits)[label]; max-subtraction
// stabilized. logits [N,l], one class index per row.
Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                             Graph* tape = nullptr);

// Row-wise argmax, ties to the lowest index.
std::vector<int> argmax_rows(const Tensor& logits);

namespace detail {
// C[M,N] += A[M,K] * B[K,N], all row-major. Fixed per-element reduction order.
void gemm_nn(const double* a, const double* b, double* c, int64_t m, int64_t k,
             int64_t n);
// C[M,N] += A[K,M]^T * B[K,N].
void gemm_tn(const double* a, const double* b, double* c, int64_t m, int64_t k,
             int64_t n);
// C[M,N] += A[M,K] * B[N,K]^T.
void gemm_nt(const double* a, const double* b, double* c, int64_t m, int64_t k,
             int64_t n);
}  // namespace detail

}  // namespace racnn
