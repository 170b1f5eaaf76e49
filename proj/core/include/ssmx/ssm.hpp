#pragma once

#include "ssmx/ops.hpp"
#include "ssmx/rng.hpp"
#include "ssmx/tensor.hpp"

// State-space machinery: zero-order-hold discretization, the sequential
// recurrence, the LTI kernel form, and the input-dependent (selective)
// parameterization that ties them together.
namespace ssmx::ssm {

// Learned diagonal state matrix, one diagonal per feature channel.
// The realized entries A = -exp(a_log) are strictly negative, which keeps
// exp(Δ·a) in (0,1) for every positive step size.
struct StateMatrix {
  int state_dim = 0;  // N
  Tensor a_log;       // [C x N]
};

// S4D-real style initialization: a_log[c][k] = log(k+1).
StateMatrix make_state_matrix(int c_feat, int state_dim);

// Per-timestep system parameters. delta is already positive (softplus output);
// delta_bias carries the learnable pre-activation offset for bookkeeping.
struct SelectiveParams {
  Tensor b;           // [L x N]
  Tensor c_out;       // [L x N]
  Tensor delta;       // [L x C]
  Tensor delta_bias;  // [C]
};

struct DiscreteSystem {
  Tensor a_bar;  // [L x C x N]
  Tensor b_bar;  // [L x C x N]
};

// Zero-order hold: Ā = exp(Δ·a), B̄ = ((exp(Δ·a) - 1)/a)·B, with the series
// limit Δ·B taking over at |Δ·a| <= 1e-8. Differentiable in delta, a_log, b.
DiscreteSystem discretize(const StateMatrix& a, const SelectiveParams& params);

// h_t = Ā_t ⊙ h_{t-1} + B̄_t·u_t ;  y_t = Σ_n c_out[t,n]·h_t[·,n].
// h0 defaults to zeros; L = 0 produces an empty output. The adjoint runs the
// reverse recurrence, so the whole scan is differentiable.
Tensor recurrent_scan(const DiscreteSystem& sys, const SelectiveParams& params,
                      const Tensor& u, const Tensor& h0 = Tensor());

// The length-L kernel (CB̄, CĀB̄, ..., CĀ^{L-1}B̄), one row per channel.
// Only valid when every timestep shares the same parameters; time-varying
// systems raise a contract error.
Tensor lti_kernel(const DiscreteSystem& sys, const SelectiveParams& params, int len);

// Causal convolution y[k] = Σ_{j<=k} kernel[c,j]·u[k-j,c]. The dual route to
// recurrent_scan for LTI systems; kept loop-coded and tape-free on purpose.
Tensor kernel_apply(const Tensor& kernel, const Tensor& u);

// Input-dependent parameterization: B = x·W_B, C = x·W_C,
// Δ = softplus(x·W_Δ + Δ̃).
struct SelectiveScanWeights {
  Tensor w_b;         // [C x N]
  Tensor w_c;         // [C x N]
  Tensor w_delta;     // [C x C]
  Tensor delta_bias;  // [C], the learnable Δ̃
  Tensor a_log;       // [C x N]
};

// delta_bias is drawn so softplus(Δ̃) is log-uniform in [1e-3, 1e-1].
SelectiveScanWeights init_selective_scan(int c_feat, int state_dim, Rng& rng);

SelectiveParams build_selective_params(const Tensor& x_seq, const SelectiveScanWeights& w);

// Projections -> discretize -> recurrent scan, end-to-end differentiable.
Tensor selective_scan(const Tensor& x_seq, const SelectiveScanWeights& w);

}  // namespace ssmx::ssm
