#include "ssmx/ops.hpp"

#include <algorithm>
#include <cmath>

namespace ssmx {

namespace {

using Buf = std::shared_ptr<std::vector<double>>;

// The tape to record on, or nullptr when no input is tracked.
Graph* tape_for(std::initializer_list<const Tensor*> inputs) {
  Graph* g = Graph::current();
  if (!g) return nullptr;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return g;
  }
  return nullptr;
}

std::vector<int> input_ids(Graph* g, std::initializer_list<const Tensor*> inputs) {
  std::vector<int> ids;
  ids.reserve(inputs.size());
  for (const Tensor* t : inputs) {
    ids.push_back(t->requires_grad() ? g->node_id(*t) : -1);
  }
  return ids;
}

Buf grad_buf(const Tensor& t) { return t.requires_grad() ? t.grad_ptr() : nullptr; }

int prepare_output(Graph* g, Tensor& out) {
  out.set_requires_grad(true);
  return g->node_id(out);
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor unary_op(const char* name, const Tensor& x, double (*f)(double),
                double (*df)(double)) {
  Tensor out(x.shape());
  auto xs = x.values();
  auto os = out.span();
  for (int64_t i = 0; i < x.size(); ++i) os[i] = f(xs[i]);
  if (Graph* g = tape_for({&x})) {
    auto ids = input_ids(g, {&x});
    const int oid = prepare_output(g, out);
    Buf og = out.grad_ptr(), xg = grad_buf(x), xd = x.data_ptr();
    g->record(name, std::move(ids), oid, [og, xg, xd, df] {
      for (size_t i = 0; i < xd->size(); ++i) (*xg)[i] += (*og)[i] * df((*xd)[i]);
    });
  }
  return out;
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  }
}

}  // namespace

Tensor silu(const Tensor& x) {
  return unary_op(
      "silu", x, [](double v) { return v * stable_sigmoid(v); },
      [](double v) {
        const double s = stable_sigmoid(v);
        return s * (1.0 + v * (1.0 - s));
      });
}

Tensor softplus(const Tensor& x) {
  return unary_op(
      "softplus", x,
      [](double v) { return v > 30.0 ? v : std::log1p(std::exp(v)); },
      [](double v) { return stable_sigmoid(v); });
}

Tensor sigmoid(const Tensor& x) {
  return unary_op(
      "sigmoid", x, [](double v) { return stable_sigmoid(v); },
      [](double v) {
        const double s = stable_sigmoid(v);
        return s * (1.0 - s);
      });
}

Tensor abs(const Tensor& x) {
  return unary_op(
      "abs", x, [](double v) { return std::fabs(v); },
      [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  Tensor out(a.shape());
  auto as = a.values(), bs = b.values();
  auto os = out.span();
  for (int64_t i = 0; i < a.size(); ++i) os[i] = as[i] + bs[i];
  if (Graph* g = tape_for({&a, &b})) {
    auto ids = input_ids(g, {&a, &b});
    const int oid = prepare_output(g, out);
    Buf og = out.grad_ptr(), ga = grad_buf(a), gb = grad_buf(b);
    g->record("add", std::move(ids), oid, [og, ga, gb] {
      for (size_t i = 0; i < og->size(); ++i) {
        if (ga) (*ga)[i] += (*og)[i];
        if (gb) (*gb)[i] += (*og)[i];
      }
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  Tensor out(a.shape());
  auto as = a.values(), bs = b.values();
  auto os = out.span();
  for (int64_t i = 0; i < a.size(); ++i) os[i] = as[i] - bs[i];
  if (Graph* g = tape_for({&a, &b})) {
    auto ids = input_ids(g, {&a, &b});
    const int oid = prepare_output(g, out);
    Buf og = out.grad_ptr(), ga = grad_buf(a), gb = grad_buf(b);
    g->record("sub", std::move(ids), oid, [og, ga, gb] {
      for (size_t i = 0; i < og->size(); ++i) {
        if (ga) (*ga)[i] += (*og)[i];
        if (gb) (*gb)[i] -= (*og)[i];
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape("mul", a, b);
  Tensor out(a.shape());
  auto as = a.values(), bs = b.values();
  auto os = out.span();
  for (int64_t i = 0; i < a.size(); ++i) os[i] = as[i] * bs[i];
  if (Graph* g = tape_for({&a, &b})) {
    auto ids = input_ids(g, {&a, &b});
    const int oid = prepare_output(g, out);
    Buf og = out.grad_ptr(), ga = grad_buf(a), gb = grad_buf(b);
    Buf ad = a.data_ptr(), bd = b.data_ptr();
    g->record("mul", std::move(ids), oid, [og, ga, gb, ad, bd] {
      for (size_t i = 0; i < og->size(); ++i) {
        if (ga) (*ga)[i] += (*og)[i] * (*bd)[i];
        if (gb) (*gb)[i] += (*og)[i] * (*ad)[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& a, double c) {
  Tensor out(a.shape());
  auto as = a.values();
  auto os = out.span();
  for (int64_t i = 0; i < a.size(); ++i) os[i] = as[i] * c;
  if (Graph* g = tape_for({&a})) {
    auto ids = input_ids(g, {&a});
    const int oid = prepare_output(g, out);
    Buf og = out.grad_ptr(), ga = grad_buf(a);
    g->record("scale", std::move(ids), oid, [og, ga, c] {
      for (size_t i = 0; i < og->size(); ++i) (*ga)[i] += (*og)[i] * c;
    });
  }
  return out;
}

Tensor add_scalar(const Tensor& a, double c) {
  Tensor out(a.shape());
  auto as = a.values();
  auto os = out.span();
  for (int64_t i = 0; i < a.size(); ++i) os[i] = as[i] + c;
  if (Graph* g = tape_for({&a})) {
    auto ids = input_ids(g, {&a});
    const int oid = prepare_output(g, out);
    Buf og = out.grad_ptr(), ga = grad_buf(a);
    g->record("add_scalar", std::move(ids), oid, [og, ga] {
      for (size_t i = 0; i < og->size(); ++i) (*ga)[i] += (*og)[i];
    });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  Tensor out({1}, {acc});
  if (Graph* g = tape_for({&x})) {
    auto ids = input_ids(g, {&x});
    const int oid = prepare_output(g, out);
    Buf og = out.grad_ptr(), xg = grad_buf(x);
    const size_t n = static_cast<size_t>(x.size());
    g->record("sum", std::move(ids), oid, [og, xg, n] {
      for (size_t i = 0; i < n; ++i) (*xg)[i] += (*og)[0];
    });
  }
  return out;
}

Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw ContractError("mean of empty tensor");
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  const double inv = 1.0 / static_cast<double>(x.size());
  Tensor out({1}, {acc * inv});
  if (Graph* g = tape_for({&x})) {
    auto ids = input_ids(g, {&x});
    const int oid = prepare_output(g, out);
    Buf og = out.grad_ptr(), xg = grad_buf(x);
    const size_t n = static_cast<size_t>(x.size());
    g->record("mean", std::move(ids), oid, [og, xg, n, inv] {
      for (size_t i = 0; i < n; ++i) (*xg)[i] += (*og)[0] * inv;
    });
  }
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()));
  }
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out({m, n});
  auto as = a.values(), bs = b.values();
  auto os = out.span();
  for (int i = 0; i < m; ++i) {
    for (int kk = 0; kk < k; ++kk) {
      const double av = as[i * k + kk];
      if (av == 0.0) continue;
      for (int j = 0; j < n; ++j) os[i * n + j] += av * bs[kk * n + j];
    }
  }
  if (Graph* g = tape_for({&a, &b})) {
    auto ids = input_ids(g, {&a, &b});
    const int oid = prepare_output(g, out);
    Buf og = out.grad_ptr(), ga = grad_buf(a), gb = grad_buf(b);
    Buf ad = a.data_ptr(), bd = b.data_ptr();
    g->record("matmul", std::move(ids), oid, [og, ga, gb, ad, bd, m, k, n] {
      if (ga) {  // dA = dOut · Bᵀ
        for (int i = 0; i < m; ++i)
          for (int kk = 0; kk < k; ++kk) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += (*og)[i * n + j] * (*bd)[kk * n + j];
            (*ga)[i * k + kk] += acc;
          }
      }
      if (gb) {  // dB = Aᵀ · dOut
        for (int kk = 0; kk < k; ++kk)
          for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int i = 0; i < m; ++i) acc += (*ad)[i * k + kk] * (*og)[i * n + j];
            (*gb)[kk * n + j] += acc;
          }
      }
    });
  }
  return out;
}

Tensor conv2d(const Tensor& x, const Tensor& w, int stride, int padding) {
  if (x.ndim() != 3 || w.ndim() != 4) {
    throw ShapeError("conv2d: expected [CxHxW] input and [OxCxkxk] kernel, got " +
                     shape_str(x.shape()) + " and " + shape_str(w.shape()));
  }
  if (w.dim(1) != x.dim(0)) {
    throw ShapeError("conv2d: channel mismatch " + shape_str(x.shape()) + " vs " +
                     shape_str(w.shape()));
  }
  const int kh = w.dim(2), kw = w.dim(3);
  if (kh != kw || kh % 2 == 0) throw ContractError("conv2d: kernel must be square and odd");
  if (stride < 1 || padding < 0) throw ContractError("conv2d: stride >= 1, padding >= 0");
  const int ci = x.dim(0), h = x.dim(1), ww = x.dim(2), co = w.dim(0), k = kh;
  if ((h + 2 * padding - k) % stride != 0 || (ww + 2 * padding - k) % stride != 0 ||
      h + 2 * padding < k || ww + 2 * padding < k) {
    throw ShapeError("conv2d: non-integer output size for input " + shape_str(x.shape()) +
                     ", kernel " + shape_str(w.shape()) + ", stride " +
                     std::to_string(stride) + ", padding " + std::to_string(padding));
  }
  const int oh = (h + 2 * padding - k) / stride + 1;
  const int ow = (ww + 2 * padding - k) / stride + 1;
  Tensor out({co, oh, ow});
  auto xs = x.values(), wsv = w.values();
  auto os = out.span();
  for (int o = 0; o < co; ++o) {
    for (int r = 0; r < oh; ++r) {
      for (int c = 0; c < ow; ++c) {
        double acc = 0.0;
        for (int ic = 0; ic < ci; ++ic) {
          for (int i = 0; i < k; ++i) {
            const int ih = r * stride - padding + i;
            if (ih < 0 || ih >= h) continue;
            for (int j = 0; j < k; ++j) {
              const int iw = c * stride - padding + j;
              if (iw < 0 || iw >= ww) continue;
              acc += xs[(ic * h + ih) * ww + iw] * wsv[((o * ci + ic) * k + i) * k + j];
            }
          }
        }
        os[(o * oh + r) * ow + c] = acc;
      }
    }
  }
  if (Graph* g = tape_for({&x, &w})) {
    auto ids = input_ids(g, {&x, &w});
    const int oid = prepare_output(g, out);
    Buf og = out.grad_ptr(), gx = grad_buf(x), gw = grad_buf(w);
    Buf xd = x.data_ptr(), wd = w.data_ptr();
    g->record("conv2d", std::move(ids), oid,
              [og, gx, gw, xd, wd, ci, h, ww, co, k, oh, ow, stride, padding] {
                for (int o = 0; o < co; ++o)
                  for (int r = 0; r < oh; ++r)
                    for (int c = 0; c < ow; ++c) {
                      const double go = (*og)[(o * oh + r) * ow + c];
                      if (go == 0.0) continue;
                      for (int ic = 0; ic < ci; ++ic)
                        for (int i = 0; i < k; ++i) {
                          const int ih = r * stride - padding + i;
                          if (ih < 0 || ih >= h) continue;
                          for (int j = 0; j < k; ++j) {
                            const int iw = c * stride - padding + j;
                            if (iw < 0 || iw >= ww) continue;
                            const size_t xi = (static_cast<size_t>(ic) * h + ih) * ww + iw;
                            const size_t wi =
                                ((static_cast<size_t>(o) * ci + ic) * k + i) * k + j;
                            if (gx) (*gx)[xi] += go * (*wd)[wi];
                            if (gw) (*gw)[wi] += go * (*xd)[xi];
                          }
                        }
                    }
              });
  }
  return out;
}

Tensor conv1d(const Tensor& x, const Tensor& w, int stride, int padding) {
  if (x.ndim() != 2 || w.ndim() != 3 || w.dim(1) != x.dim(0)) {
    throw ShapeError("conv1d: incompatible shapes " + shape_str(x.shape()) + " and " +
                     shape_str(w.shape()));
  }
  if (stride < 1 || padding < 0) throw ContractError("conv1d: stride >= 1, padding >= 0");
  const int ci = x.dim(0), len = x.dim(1), co = w.dim(0), k = w.dim(2);
  if ((len + 2 * padding - k) % stride != 0 || len + 2 * padding < k) {
    throw ShapeError("conv1d: non-integer output size for input " + shape_str(x.shape()) +
                     ", kernel " + shape_str(w.shape()));
  }
  const int ol = (len + 2 * padding - k) / stride + 1;
  Tensor out({co, ol});
  auto xs = x.values(), wsv = w.values();
  auto os = out.span();
  for (int o = 0; o < co; ++o) {
    for (int t = 0; t < ol; ++t) {
      double acc = 0.0;
      for (int ic = 0; ic < ci; ++ic) {
        for (int j = 0; j < k; ++j) {
          const int it = t * stride - padding + j;
          if (it < 0 || it >= len) continue;
          acc += xs[ic * len + it] * wsv[(o * ci + ic) * k + j];
        }
      }
      os[o * ol + t] = acc;
    }
  }
  if (Graph* g = tape_for({&x, &w})) {
    auto ids = input_ids(g, {&x, &w});
    const int oid = prepare_output(g, out);
    Buf og = out.grad_ptr(), gx = grad_buf(x), gw = grad_buf(w);
    Buf xd = x.data_ptr(), wd = w.data_ptr();
    g->record("conv1d", std::move(ids), oid,
              [og, gx, gw, xd, wd, ci, len, co, k, ol, stride, padding] {
                for (int o = 0; o < co; ++o)
                  for (int t = 0; t < ol; ++t) {
                    const double go = (*og)[o * ol + t];
                    if (go == 0.0) continue;
                    for (int ic = 0; ic < ci; ++ic)
                      for (int j = 0; j < k; ++j) {
                        const int it = t * stride - padding + j;
                        if (it < 0 || it >= len) continue;
                        if (gx) (*gx)[ic * len + it] += go * (*wd)[(o * ci + ic) * k + j];
                        if (gw) (*gw)[(o * ci + ic) * k + j] += go * (*xd)[ic * len + it];
                      }
                  }
              });
  }
  return out;
}

Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  if (x.ndim() < 1) throw ShapeError("layernorm: input must have at least one axis");
  const int c = x.dim(x.ndim() - 1);
  if (gamma.size() != c || beta.size() != c) {
    throw ShapeError("layernorm: affine shape " + shape_str(gamma.shape()) +
                     " does not match channel count " + std::to_string(c));
  }
  if (!(eps > 0.0)) throw ContractError("layernorm: eps must be positive");
  const int64_t rows = x.size() / c;
  Tensor out(x.shape());
  auto xs = x.values(), gs = gamma.values(), bs = beta.values();
  auto os = out.span();
  for (int64_t r = 0; r < rows; ++r) {
    const double* row = &xs[r * c];
    double mu = 0.0;
    for (int i = 0; i < c; ++i) mu += row[i];
    mu /= c;
    double var = 0.0;
    for (int i = 0; i < c; ++i) var += (row[i] - mu) * (row[i] - mu);
    var /= c;
    const double inv = 1.0 / std::sqrt(var + eps);
    for (int i = 0; i < c; ++i) {
      os[r * c + i] = (row[i] - mu) * inv * gs[i] + bs[i];
    }
  }
  if (Graph* g = tape_for({&x, &gamma, &beta})) {
    auto ids = input_ids(g, {&x, &gamma, &beta});
    const int oid = prepare_output(g, out);
    Buf og = out.grad_ptr(), gx = grad_buf(x), gg = grad_buf(gamma), gb = grad_buf(beta);
    Buf xd = x.data_ptr(), gd = gamma.data_ptr();
    g->record("layernorm", std::move(ids), oid, [og, gx, gg, gb, xd, gd, rows, c, eps] {
      std::vector<double> xhat(static_cast<size_t>(c));
      for (int64_t r = 0; r < rows; ++r) {
        const double* row = &(*xd)[r * c];
        const double* go = &(*og)[r * c];
        double mu = 0.0;
        for (int i = 0; i < c; ++i) mu += row[i];
        mu /= c;
        double var = 0.0;
        for (int i = 0; i < c; ++i) var += (row[i] - mu) * (row[i] - mu);
        var /= c;
        const double inv = 1.0 / std::sqrt(var + eps);
        double s1 = 0.0, s2 = 0.0;
        for (int i = 0; i < c; ++i) {
          xhat[i] = (row[i] - mu) * inv;
          const double dxh = go[i] * (*gd)[i];
          s1 += dxh;
          s2 += dxh * xhat[i];
        }
        for (int i = 0; i < c; ++i) {
          if (gx) {
            const double dxh = go[i] * (*gd)[i];
            (*gx)[r * c + i] += inv * (dxh - s1 / c - xhat[i] * s2 / c);
          }
          if (gg) (*gg)[i] += go[i] * xhat[i];
          if (gb) (*gb)[i] += go[i];
        }
      }
    });
  }
  return out;
}

Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
  if (x.ndim() != 2 || bias.size() != x.dim(1)) {
    throw ShapeError("add_row_bias: shapes " + shape_str(x.shape()) + " and " +
                     shape_str(bias.shape()));
  }
  const int r = x.dim(0), c = x.dim(1);
  Tensor out(x.shape());
  auto xs = x.values(), bs = bias.values();
  auto os = out.span();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) os[i * c + j] = xs[i * c + j] + bs[j];
  if (Graph* g = tape_for({&x, &bias})) {
    auto ids = input_ids(g, {&x, &bias});
    const int oid = prepare_output(g, out);
    Buf og = out.grad_ptr(), gx = grad_buf(x), gb = grad_buf(bias);
    g->record("add_row_bias", std::move(ids), oid, [og, gx, gb, r, c] {
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) {
          const double go = (*og)[i * c + j];
          if (gx) (*gx)[i * c + j] += go;
          if (gb) (*gb)[j] += go;
        }
    });
  }
  return out;
}

Tensor add_channel_bias(const Tensor& x, const Tensor& bias) {
  if (x.ndim() < 2 || bias.size() != x.dim(0)) {
    throw ShapeError("add_channel_bias: shapes " + shape_str(x.shape()) + " and " +
                     shape_str(bias.shape()));
  }
  const int c = x.dim(0);
  const int64_t per = x.size() / c;
  Tensor out(x.shape());
  auto xs = x.values(), bs = bias.values();
  auto os = out.span();
  for (int i = 0; i < c; ++i)
    for (int64_t j = 0; j < per; ++j) os[i * per + j] = xs[i * per + j] + bs[i];
  if (Graph* g = tape_for({&x, &bias})) {
    auto ids = input_ids(g, {&x, &bias});
    const int oid = prepare_output(g, out);
    Buf og = out.grad_ptr(), gx = grad_buf(x), gb = grad_buf(bias);
    g->record("add_channel_bias", std::move(ids), oid, [og, gx, gb, c, per] {
      for (int i = 0; i < c; ++i)
        for (int64_t j = 0; j < per; ++j) {
          const double go = (*og)[i * per + j];
          if (gx) (*gx)[i * per + j] += go;
          if (gb) (*gb)[i] += go;
        }
    });
  }
  return out;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.size()) {
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                     shape_str(shape));
  }
  auto xs = x.values();
  Tensor out(std::move(shape), std::vector<double>(xs.begin(), xs.end()));
  if (Graph* g = tape_for({&x})) {
    auto ids = input_ids(g, {&x});
    const int oid = prepare_output(g, out);
    Buf og = out.grad_ptr(), gx = grad_buf(x);
    g->record("reshape", std::move(ids), oid, [og, gx] {
      for (size_t i = 0; i < og->size(); ++i) (*gx)[i] += (*og)[i];
    });
  }
  return out;
}

Tensor transpose2d(const Tensor& x) {
  if (x.ndim() != 2) throw ShapeError("transpose2d: expected 2-d, got " + shape_str(x.shape()));
  const int r = x.dim(0), c = x.dim(1);
  Tensor out({c, r});
  auto xs = x.values();
  auto os = out.span();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) os[j * r + i] = xs[i * c + j];
  if (Graph* g = tape_for({&x})) {
    auto ids = input_ids(g, {&x});
    const int oid = prepare_output(g, out);
    Buf og = out.grad_ptr(), gx = grad_buf(x);
    g->record("transpose2d", std::move(ids), oid, [og, gx, r, c] {
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) (*gx)[i * c + j] += (*og)[j * r + i];
    });
  }
  return out;
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_rows: no parts");
  const int c = parts[0].ndim() == 2 ? parts[0].dim(1) : -1;
  int rows = 0;
  for (const Tensor& p : parts) {
    if (p.ndim() != 2 || p.dim(1) != c) {
      throw ShapeError("concat_rows: part shape " + shape_str(p.shape()) +
                       " incompatible with column count " + std::to_string(c));
    }
    rows += p.dim(0);
  }
  Tensor out({rows, c});
  auto os = out.span();
  int at = 0;
  for (const Tensor& p : parts) {
    auto ps = p.values();
    std::copy(ps.begin(), ps.end(), os.begin() + static_cast<int64_t>(at) * c);
    at += p.dim(0);
  }
  Graph* g = Graph::current();
  bool tracked = false;
  if (g) {
    for (const Tensor& p : parts) tracked |= p.requires_grad();
  }
  if (g && tracked) {
    std::vector<int> ids;
    std::vector<Buf> grads;
    std::vector<int> sizes;
    for (const Tensor& p : parts) {
      ids.push_back(p.requires_grad() ? g->node_id(p) : -1);
      grads.push_back(grad_buf(p));
      sizes.push_back(p.dim(0));
    }
    Tensor& out_ref = out;
    const int oid = prepare_output(g, out_ref);
    Buf og = out.grad_ptr();
    g->record("concat_rows", std::move(ids), oid, [og, grads, sizes, c] {
      int64_t at2 = 0;
      for (size_t p = 0; p < grads.size(); ++p) {
        const int64_t n = static_cast<int64_t>(sizes[p]) * c;
        if (grads[p]) {
          for (int64_t i = 0; i < n; ++i) (*grads[p])[i] += (*og)[at2 + i];
        }
        at2 += n;
      }
    });
  }
  return out;
}

Tensor slice_rows(const Tensor& x, int begin, int end) {
  if (x.ndim() != 2 || begin < 0 || end > x.dim(0) || begin > end) {
    throw ShapeError("slice_rows: range [" + std::to_string(begin) + "," +
                     std::to_string(end) + ") invalid for " + shape_str(x.shape()));
  }
  const int c = x.dim(1);
  auto xs = x.values();
  Tensor out({end - begin, c},
             std::vector<double>(xs.begin() + static_cast<int64_t>(begin) * c,
                                 xs.begin() + static_cast<int64_t>(end) * c));
  if (Graph* g = tape_for({&x})) {
    auto ids = input_ids(g, {&x});
    const int oid = prepare_output(g, out);
    Buf og = out.grad_ptr(), gx = grad_buf(x);
    g->record("slice_rows", std::move(ids), oid, [og, gx, begin, c] {
      for (size_t i = 0; i < og->size(); ++i) {
        (*gx)[static_cast<size_t>(begin) * c + i] += (*og)[i];
      }
    });
  }
  return out;
}

Tensor gather_rows(const std::vector<Tensor>& parts, const std::vector<RowRef>& index) {
  if (parts.empty()) throw ContractError("gather_rows: no parts");
  const int c = parts[0].ndim() == 2 ? parts[0].dim(1) : -1;
  for (const Tensor& p : parts) {
    if (p.ndim() != 2 || p.dim(1) != c) {
      throw ShapeError("gather_rows: part shape " + shape_str(p.shape()) +
                       " incompatible with column count " + std::to_string(c));
    }
  }
  for (const RowRef& ref : index) {
    if (ref.part < 0 || ref.part >= static_cast<int>(parts.size()) || ref.row < 0 ||
        ref.row >= parts[static_cast<size_t>(ref.part)].dim(0)) {
      throw ContractError("gather_rows: index (" + std::to_string(ref.part) + "," +
                          std::to_string(ref.row) + ") out of range");
    }
  }
  Tensor out({static_cast<int>(index.size()), c});
  auto os = out.span();
  for (size_t s = 0; s < index.size(); ++s) {
    auto ps = parts[static_cast<size_t>(index[s].part)].values();
    std::copy_n(ps.begin() + static_cast<int64_t>(index[s].row) * c, c,
                os.begin() + static_cast<int64_t>(s) * c);
  }
  Graph* g = Graph::current();
  bool tracked = false;
  if (g) {
    for (const Tensor& p : parts) tracked |= p.requires_grad();
  }
  if (g && tracked) {
    std::vector<int> ids;
    std::vector<Buf> grads;
    for (const Tensor& p : parts) {
      ids.push_back(p.requires_grad() ? g->node_id(p) : -1);
      grads.push_back(grad_buf(p));
    }
    const int oid = prepare_output(g, out);
    Buf og = out.grad_ptr();
    auto idx = index;
    g->record("gather_rows", std::move(ids), oid, [og, grads, idx, c] {
      for (size_t s = 0; s < idx.size(); ++s) {
        const Buf& gp = grads[static_cast<size_t>(idx[s].part)];
        if (!gp) continue;
        for (int j = 0; j < c; ++j) {
          (*gp)[static_cast<size_t>(idx[s].row) * c + j] += (*og)[s * c + j];
        }
      }
    });
  }
  return out;
}

Tensor pad2d(const Tensor& x, int top, int bottom, int left, int right) {
  if (x.ndim() != 3) throw ShapeError("pad2d: expected [CxHxW], got " + shape_str(x.shape()));
  if (top < 0 || bottom < 0 || left < 0 || right < 0) {
    throw ContractError("pad2d: negative padding");
  }
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int oh = h + top + bottom, ow = w + left + right;
  Tensor out({c, oh, ow});
  auto xs = x.values();
  auto os = out.span();
  for (int ic = 0; ic < c; ++ic)
    for (int r = 0; r < h; ++r)
      for (int cc = 0; cc < w; ++cc)
        os[(ic * oh + r + top) * ow + cc + left] = xs[(ic * h + r) * w + cc];
  if (Graph* g = tape_for({&x})) {
    auto ids = input_ids(g, {&x});
    const int oid = prepare_output(g, out);
    Buf og = out.grad_ptr(), gx = grad_buf(x);
    g->record("pad2d", std::move(ids), oid, [og, gx, c, h, w, oh, ow, top, left] {
      for (int ic = 0; ic < c; ++ic)
        for (int r = 0; r < h; ++r)
          for (int cc = 0; cc < w; ++cc)
            (*gx)[(ic * h + r) * w + cc] += (*og)[(ic * oh + r + top) * ow + cc + left];
    });
  }
  return out;
}

Tensor scale_by_map(const Tensor& x, const Tensor& field) {
  if (x.ndim() != 3 || field.ndim() != 3 || field.dim(0) != 1 || field.dim(1) != x.dim(1) ||
      field.dim(2) != x.dim(2)) {
    throw ShapeError("scale_by_map: shapes " + shape_str(x.shape()) + " and " +
                     shape_str(field.shape()));
  }
  const int c = x.dim(0);
  const int64_t hw = static_cast<int64_t>(x.dim(1)) * x.dim(2);
  Tensor out(x.shape());
  auto xs = x.values(), fs = field.values();
  auto os = out.span();
  for (int ic = 0; ic < c; ++ic)
    for (int64_t p = 0; p < hw; ++p) os[ic * hw + p] = xs[ic * hw + p] * fs[p];
  if (Graph* g = tape_for({&x, &field})) {
    auto ids = input_ids(g, {&x, &field});
    const int oid = prepare_output(g, out);
    Buf og = out.grad_ptr(), gx = grad_buf(x), gf = grad_buf(field);
    Buf xd = x.data_ptr(), fd = field.data_ptr();
    g->record("scale_by_map", std::move(ids), oid, [og, gx, gf, xd, fd, c, hw] {
      for (int ic = 0; ic < c; ++ic)
        for (int64_t p = 0; p < hw; ++p) {
          const double go = (*og)[ic * hw + p];
          if (gx) (*gx)[ic * hw + p] += go * (*fd)[p];
          if (gf) (*gf)[p] += go * (*xd)[ic * hw + p];
        }
    });
  }
  return out;
}

Tensor map_to_rows(const Tensor& x) {
  if (x.ndim() != 3) throw ShapeError("map_to_rows: expected [CxHxW], got " + shape_str(x.shape()));
  const int c = x.dim(0), hw = x.dim(1) * x.dim(2);
  return transpose2d(reshape(x, {c, hw}));
}

Tensor rows_to_map(const Tensor& x, int h, int w) {
  if (x.ndim() != 2 || x.dim(0) != h * w) {
    throw ShapeError("rows_to_map: cannot view " + shape_str(x.shape()) + " as map of " +
                     std::to_string(h) + "x" + std::to_string(w) + " pixels");
  }
  return reshape(transpose2d(x), {x.dim(1), h, w});
}

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                  double step) {
  std::vector<double> analytic;
  {
    Tensor xa = x.clone(true);
    Graph g;
    Tensor y = f(xa);
    if (y.size() != 1) {
      throw ContractError("grad_check: f must be scalar-valued, got shape " +
                          shape_str(y.shape()));
    }
    if (y.requires_grad() && g.known(y)) {
      g.backward(y);
      auto gr = xa.grad();
      analytic.assign(gr.begin(), gr.end());
    } else {
      // f does not depend on x; its gradient is identically zero.
      analytic.assign(static_cast<size_t>(x.size()), 0.0);
    }
  }
  auto eval = [&f](Tensor t) {
    Graph scratch;  // isolates any recording done by f's captured parameters
    return f(t)[0];
  };
  double max_rel = 0.0;
  auto base = x.values();
  for (int64_t i = 0; i < x.size(); ++i) {
    std::vector<double> plus(base.begin(), base.end());
    std::vector<double> minus(base.begin(), base.end());
    plus[static_cast<size_t>(i)] += step;
    minus[static_cast<size_t>(i)] -= step;
    const double fp = eval(Tensor(x.shape(), std::move(plus)));
    const double fm = eval(Tensor(x.shape(), std::move(minus)));
    const double numeric = (fp - fm) / (2.0 * step);
    const double denom = std::max({std::fabs(analytic[static_cast<size_t>(i)]),
                                   std::fabs(numeric), 1e-8});
    max_rel = std::max(max_rel, std::fabs(analytic[static_cast<size_t>(i)] - numeric) / denom);
  }
  return max_rel;
}

}  // namespace ssmx
