#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace ssmx::oracle {

Tensor conv_xcorr_naive(const Tensor& z, const Tensor& x) {
  const int c = z.dim(0), hz = z.dim(1), wz = z.dim(2);
  const int hx = x.dim(1), wx = x.dim(2);
  const int oh = hx - hz + 1, ow = wx - wz + 1;
  Tensor out({1, oh, ow});
  auto o = out.span();
  for (int r = 0; r < oh; ++r) {
    for (int cc = 0; cc < ow; ++cc) {
      double acc = 0.0;
      for (int ch = 0; ch < c; ++ch) {
        for (int i = 0; i < hz; ++i) {
          for (int j = 0; j < wz; ++j) {
            acc += z[(static_cast<int64_t>(ch) * hz + i) * wz + j] *
                   x[(static_cast<int64_t>(ch) * hx + r + i) * wx + cc + j];
          }
        }
      }
      o[static_cast<int64_t>(r) * ow + cc] = acc;
    }
  }
  return out;
}

std::vector<double> causal_conv(const std::vector<double>& kernel,
                                const std::vector<double>& u) {
  std::vector<double> y(u.size(), 0.0);
  for (size_t k = 0; k < u.size(); ++k) {
    double acc = 0.0;
    for (size_t j = 0; j <= k && j < kernel.size(); ++j) acc += kernel[j] * u[k - j];
    y[k] = acc;
  }
  return y;
}

double p_recount(const std::vector<double>& cle, double threshold) {
  int hits = 0;
  for (double e : cle) {
    if (e < threshold) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(cle.size());
}

double pnorm_recount(const std::vector<double>& norm_err) {
  // Exact area under the step success curve on [0, 0.5], frame by frame:
  // each frame contributes max(0, 0.5 - err) of threshold mass.
  double acc = 0.0;
  for (double e : norm_err) acc += 0.5 - std::min(e, 0.5);
  return acc / static_cast<double>(norm_err.size()) * 200.0;
}

double auc_recount(const std::vector<double>& ious) {
  double total = 0.0;
  for (int k = 0; k <= 20; ++k) {
    const double t = 0.05 * k;
    int hits = 0;
    for (double v : ious) {
      if (v > t) ++hits;
    }
    total += static_cast<double>(hits) / static_cast<double>(ious.size());
  }
  return total / 21.0 * 100.0;
}

double iou_naive(double ax, double ay, double aw, double ah, double bx, double by,
                 double bw, double bh) {
  const double ix = std::max(0.0, std::min(ax + aw, bx + bw) - std::max(ax, bx));
  const double iy = std::max(0.0, std::min(ay + ah, by + bh) - std::max(ay, by));
  const double inter = ix * iy;
  const double uni = aw * ah + bw * bh - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

}  // namespace ssmx::oracle
