#pragma once

#include <functional>
#include <vector>

#include "ssmx/graph.hpp"
#include "ssmx/tensor.hpp"

// Differentiable tensor operations. Every op computes eagerly and, when a
// Graph is active and an input requires a gradient, records its adjoint on
// the tape. All ops allocate fresh output buffers (no aliasing) and are
// deterministic: identical inputs give bit-identical outputs.
namespace ssmx {

// --- elementwise ---
Tensor silu(const Tensor& x);
Tensor softplus(const Tensor& x);  // overflow-safe: identity for x > 30
Tensor sigmoid(const Tensor& x);
Tensor abs(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);

// --- reductions ---
Tensor sum(const Tensor& x);   // -> [1]
Tensor mean(const Tensor& x);  // -> [1]

// --- linear algebra / convolution ---
Tensor matmul(const Tensor& a, const Tensor& b);  // [MxK]·[KxN]
// x: [C_in x H x W], w: [C_out x C_in x k x k]; cross-correlation convention.
Tensor conv2d(const Tensor& x, const Tensor& w, int stride, int padding);
// x: [C_in x L], w: [C_out x C_in x k].
Tensor conv1d(const Tensor& x, const Tensor& w, int stride, int padding);
// Normalizes over the last axis, then applies the per-channel affine.
Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);

Tensor add_row_bias(const Tensor& x, const Tensor& bias);      // [RxC] + [C]
Tensor add_channel_bias(const Tensor& x, const Tensor& bias);  // [Cx...] + [C]

// --- layout ---
Tensor reshape(const Tensor& x, Shape shape);
Tensor transpose2d(const Tensor& x);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& x, int begin, int end);

struct RowRef {
  int part;
  int row;
};
// out[s] = parts[index[s].part].row(index[s].row); every part is [R_i x C].
Tensor gather_rows(const std::vector<Tensor>& parts, const std::vector<RowRef>& index);

Tensor pad2d(const Tensor& x, int top, int bottom, int left, int right);
Tensor scale_by_map(const Tensor& x, const Tensor& field);  // [CxHxW] ⊙ [1xHxW]

// [C x H x W] -> [H·W x C] (pixels as rows) and back.
Tensor map_to_rows(const Tensor& x);
Tensor rows_to_map(const Tensor& x, int h, int w);

// --- verification ---
// Max over entries of |analytic - central difference| normalized by
// max(|analytic|, |central|, 1e-8). f must return a scalar tensor.
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                  double step = 1e-5);

}  // namespace ssmx
