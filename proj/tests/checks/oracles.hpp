#pragma once

// Independently coded brute-force oracles. These deliberately avoid the
// library's implementation paths: plain loops, no shared helpers beyond the
// Tensor container itself.

#include <utility>
#include <vector>

#include "ssmx/tensor.hpp"

namespace ssmx::oracle {

// Plain triple-loop cross-correlation of template z over search x, stride 1,
// no padding.
Tensor conv_xcorr_naive(const Tensor& z, const Tensor& x);

// Causal convolution y_k = sum_{j<=k} kernel[j] * u[k-j], one channel.
std::vector<double> causal_conv(const std::vector<double>& kernel,
                                const std::vector<double>& u);

// Loop-based metric recomputations.
double p_recount(const std::vector<double>& cle, double threshold);
double pnorm_recount(const std::vector<double>& norm_err);
double auc_recount(const std::vector<double>& ious);

// Axis-aligned IoU recomputed from corner/size boxes given as (x, y, w, h).
double iou_naive(double ax, double ay, double aw, double ah, double bx, double by,
                 double bw, double bh);

}  // namespace ssmx::oracle
