#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mmhcan/tensor.hpp"

MMHCAN_NAMESPACE_BEGIN

// ---- linear algebra -------------------------------------------------------

// (m x k) . (k x n) -> (m x n)
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);  // 2-D only
Tensor reshape(const Tensor& x, Shape shape);

// ---- elementwise ----------------------------------------------------------
// Binary ops accept equal shapes or a single-element operand on either side.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, Scalar factor);
Tensor add_scalar(const Tensor& x, Scalar offset);

Tensor relu(const Tensor& x);  // relu'(0) = 0
Tensor log1p(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor sqrt_recip(const Tensor& x);  // 1/sqrt(x); DomainError for x <= 0
Tensor sqrt(const Tensor& x);        // gradient at 0 is taken as 0
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);

// ---- row/column structured ops (2-D) ---------------------------------------

// x (r x c) + bias (c), bias repeated over rows.
Tensor add_row_bias(const Tensor& x, const Tensor& bias);
// x (r x c) * s (r x 1), each row scaled by its own factor.
Tensor scale_rows(const Tensor& x, const Tensor& s);
// Horizontal concatenation of equal-row-count matrices.
Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count);
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows);
// (r x c) -> (r x 1)
Tensor sum_cols(const Tensor& x);

// ---- reductions -----------------------------------------------------------

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// Softmax of a 1-D tensor (axis 0) or of a 2-D tensor along axis 0 or 1.
Tensor softmax(const Tensor& x, std::size_t axis);
// Mean negative log-likelihood of integer labels under row-wise softmax.
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

// ---- convolution / pooling -------------------------------------------------

// x (B x C x L), w (C' x C x K), b (C'); valid cross-correlation.
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b,
              std::size_t stride = 1);
// Max over windows along the last axis of (B x C x L).
Tensor maxpool1d(const Tensor& x, std::size_t size, std::size_t stride);
// x (B x C x H x W), w (C' x C x kh x kw), b (C'); zero padding `pad`.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b,
              std::size_t stride, std::size_t pad);
// (B x C x H x W) -> (B x C)
Tensor global_avg_pool2d(const Tensor& x);
// (B x C x L) -> (L*B x C); row t*B + b holds x[b, :, t].
Tensor time_major(const Tensor& x);

MMHCAN_NAMESPACE_END
