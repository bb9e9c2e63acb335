#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace saber {

// Quantile value network with manual forward/backward passes: a dense or
// convolutional trunk, a cosine quantile embedding merged multiplicatively,
// and noisy-dense dueling heads. Scalar type is a template parameter:
// double for gradient verification, float for training.

struct ConvSpec {
  int out_channels = 0;
  int kernel = 0;
  int stride = 0;
  bool operator==(const ConvSpec&) const = default;
};

struct ArchSpec {
  enum class InputKind { flat, conv };
  InputKind input_kind = InputKind::flat;

  // flat trunk: input -> hidden -> hidden, relu between
  int flat_dim = 400;
  int trunk_hidden = 64;

  // conv trunk
  int in_channels = 4;
  int in_h = 84, in_w = 84;
  std::vector<ConvSpec> conv;

  int n_actions = 18;
  int n_cos = 64;       // cosine features per quantile
  int head_hidden = 64; // dueling stream hidden width

  static ArchSpec flat_toy(int input_dim, int hidden = 64, int actions = 18);
  static ArchSpec conv84(int stack = 4, int actions = 18);

  int feature_dim() const;
  std::string to_json() const;
  static ArchSpec from_json(const std::string& text);
  void validate() const;
  bool operator==(const ArchSpec&) const = default;
};

// Offsets into the flat parameter vector.
struct DenseShape {
  int in = 0, out = 0;
  size_t w = 0, b = 0;
};
struct NoisyShape {
  int in = 0, out = 0;
  size_t w_mu = 0, w_sig = 0, b_mu = 0, b_sig = 0;
};
struct ConvShape {
  int in_c = 0, out_c = 0, kernel = 0, stride = 0;
  int in_h = 0, in_w = 0, out_h = 0, out_w = 0;
  size_t w = 0, b = 0;
};

struct NetLayout {
  std::vector<ConvShape> conv;       // conv trunk (maybe empty)
  std::vector<DenseShape> trunk;     // flat trunk (maybe empty)
  DenseShape embed;                  // n_cos -> feature_dim
  NoisyShape value1, value2;         // feature -> hidden -> 1
  NoisyShape adv1, adv2;             // feature -> hidden -> actions
  size_t param_count = 0;
  int feature_dim = 0;
};

NetLayout build_layout(const ArchSpec& arch);

// Factorized Gaussian noise transform.
template <typename T>
T noisy_f(T x) {
  return (x >= 0 ? T(1) : T(-1)) * std::sqrt(std::abs(x));
}

// Transformed noise vectors per noisy layer, in layer order
// (value1, value2, adv1, adv2).
template <typename T>
struct NoiseState {
  struct Layer {
    std::vector<T> f_in, f_out;
  };
  std::vector<Layer> layers;
};

inline constexpr double kSigma0 = 0.5;  // noisy sigma init scale

// i.i.d. uniform draws strictly inside (0, 1).
template <typename T>
std::vector<T> sample_taus(int count, Rng& rng) {
  if (count < 1) raise(ErrorCode::invalid_argument, "tau count must be >= 1");
  std::vector<T> taus(count);
  for (auto& t : taus) t = static_cast<T>(rng.uniform_open());
  return taus;
}

// theta_a = V + A_a - mean(A)
template <typename T>
void dueling_aggregate(T value, std::span<const T> adv, std::span<T> out) {
  T mean = 0;
  for (T a : adv) mean += a;
  mean /= static_cast<T>(adv.size());
  for (size_t i = 0; i < adv.size(); ++i) out[i] = value + adv[i] - mean;
}

// --- primitive layers (exposed for isolated gradient checks) -------------

// dot product over four independent accumulator chains; the fixed summation
// order keeps results reproducible while breaking the FMA latency chain
template <typename T>
inline T dot4(const T* __restrict a, const T* __restrict b, int n) {
  T a0 = 0, a1 = 0, a2 = 0, a3 = 0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 += a[i] * b[i];
    a1 += a[i + 1] * b[i + 1];
    a2 += a[i + 2] * b[i + 2];
    a3 += a[i + 3] * b[i + 3];
  }
  T acc = (a0 + a1) + (a2 + a3);
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
void dense_forward(const DenseShape& s, const T* params, const T* x, T* y) {
  for (int o = 0; o < s.out; ++o) {
    const T* w = params + s.w + static_cast<size_t>(o) * s.in;
    y[o] = params[s.b + o] + dot4(w, x, s.in);
  }
}

// accumulates into grad and dx (dx may be null)
template <typename T>
void dense_backward(const DenseShape& s, const T* params, const T* __restrict x,
                    const T* __restrict dy, T* grad, T* __restrict dx) {
  for (int o = 0; o < s.out; ++o) {
    const T g = dy[o];
    grad[s.b + o] += g;
    T* __restrict gw = grad + s.w + static_cast<size_t>(o) * s.in;
    const T* __restrict w = params + s.w + static_cast<size_t>(o) * s.in;
    if (dx) {
      for (int i = 0; i < s.in; ++i) {
        gw[i] += g * x[i];
        dx[i] += g * w[i];
      }
    } else {
      for (int i = 0; i < s.in; ++i) gw[i] += g * x[i];
    }
  }
}

template <typename T>
void noisy_forward(const NoisyShape& s, const T* params, const T* __restrict f_in,
                   const T* __restrict f_out, const T* __restrict x, T* __restrict y) {
  for (int o = 0; o < s.out; ++o) {
    const T fo = f_out[o];
    const T* __restrict wm = params + s.w_mu + static_cast<size_t>(o) * s.in;
    const T* __restrict ws = params + s.w_sig + static_cast<size_t>(o) * s.in;
    T a0 = 0, a1 = 0;
    int i = 0;
    for (; i + 2 <= s.in; i += 2) {
      a0 += (wm[i] + ws[i] * fo * f_in[i]) * x[i];
      a1 += (wm[i + 1] + ws[i + 1] * fo * f_in[i + 1]) * x[i + 1];
    }
    T acc = a0 + a1;
    for (; i < s.in; ++i) acc += (wm[i] + ws[i] * fo * f_in[i]) * x[i];
    y[o] = params[s.b_mu + o] + params[s.b_sig + o] * fo + acc;
  }
}

template <typename T>
void noisy_materialize(const NoisyShape& s, const T* params, const T* __restrict f_in,
                       const T* __restrict f_out, T* __restrict w_eff, T* __restrict b_eff) {
  for (int o = 0; o < s.out; ++o) {
    const T fo = f_out[o];
    const T* __restrict wm = params + s.w_mu + static_cast<size_t>(o) * s.in;
    const T* __restrict ws = params + s.w_sig + static_cast<size_t>(o) * s.in;
    T* __restrict we = w_eff + static_cast<size_t>(o) * s.in;
    for (int i = 0; i < s.in; ++i) we[i] = wm[i] + ws[i] * fo * f_in[i];
    b_eff[o] = params[s.b_mu + o] + params[s.b_sig + o] * fo;
  }
}

// forward through a materialized noisy layer: a plain affine map
template <typename T>
void noisy_forward_cached(const NoisyShape& s, const T* __restrict w_eff,
                          const T* __restrict b_eff, const T* __restrict x, T* __restrict y) {
  for (int o = 0; o < s.out; ++o)
    y[o] = b_eff[o] + dot4(w_eff + static_cast<size_t>(o) * s.in, x, s.in);
}

template <typename T>
void noisy_backward_cached(const NoisyShape& s, const T* __restrict w_eff,
                           const T* __restrict f_in, const T* __restrict f_out,
                           const T* __restrict x, const T* __restrict dy, T* grad,
                           T* __restrict dx) {
  for (int o = 0; o < s.out; ++o) {
    const T g = dy[o];
    const T fo = f_out[o];
    grad[s.b_mu + o] += g;
    grad[s.b_sig + o] += g * fo;
    T* __restrict gwm = grad + s.w_mu + static_cast<size_t>(o) * s.in;
    T* __restrict gws = grad + s.w_sig + static_cast<size_t>(o) * s.in;
    const T* __restrict we = w_eff + static_cast<size_t>(o) * s.in;
    if (dx) {
      for (int i = 0; i < s.in; ++i) {
        gwm[i] += g * x[i];
        gws[i] += g * x[i] * fo * f_in[i];
        dx[i] += g * we[i];
      }
    } else {
      for (int i = 0; i < s.in; ++i) {
        gwm[i] += g * x[i];
        gws[i] += g * x[i] * fo * f_in[i];
      }
    }
  }
}

template <typename T>
void noisy_backward(const NoisyShape& s, const T* params, const T* __restrict f_in,
                    const T* __restrict f_out, const T* __restrict x, const T* __restrict dy,
                    T* grad, T* __restrict dx) {
  for (int o = 0; o < s.out; ++o) {
    const T g = dy[o];
    const T fo = f_out[o];
    grad[s.b_mu + o] += g;
    grad[s.b_sig + o] += g * fo;
    T* __restrict gwm = grad + s.w_mu + static_cast<size_t>(o) * s.in;
    T* __restrict gws = grad + s.w_sig + static_cast<size_t>(o) * s.in;
    const T* __restrict wm = params + s.w_mu + static_cast<size_t>(o) * s.in;
    const T* __restrict ws = params + s.w_sig + static_cast<size_t>(o) * s.in;
    if (dx) {
      for (int i = 0; i < s.in; ++i) {
        const T noise = fo * f_in[i];
        gwm[i] += g * x[i];
        gws[i] += g * x[i] * noise;
        dx[i] += g * (wm[i] + ws[i] * noise);
      }
    } else {
      for (int i = 0; i < s.in; ++i) {
        gwm[i] += g * x[i];
        gws[i] += g * x[i] * fo * f_in[i];
      }
    }
  }
}

// valid (no padding) strided convolution, channels-first layout
template <typename T>
void conv_forward(const ConvShape& s, const T* params, const T* x, T* y) {
  for (int oc = 0; oc < s.out_c; ++oc) {
    for (int oy = 0; oy < s.out_h; ++oy) {
      for (int ox = 0; ox < s.out_w; ++ox) {
        T acc = params[s.b + oc];
        for (int ic = 0; ic < s.in_c; ++ic) {
          const T* plane = x + (static_cast<size_t>(ic) * s.in_h + oy * s.stride) * s.in_w +
                           ox * s.stride;
          const T* w = params + s.w +
                       ((static_cast<size_t>(oc) * s.in_c + ic) * s.kernel) * s.kernel;
          for (int ky = 0; ky < s.kernel; ++ky)
            for (int kx = 0; kx < s.kernel; ++kx)
              acc += w[static_cast<size_t>(ky) * s.kernel + kx] *
                     plane[static_cast<size_t>(ky) * s.in_w + kx];
        }
        y[(static_cast<size_t>(oc) * s.out_h + oy) * s.out_w + ox] = acc;
      }
    }
  }
}

template <typename T>
void conv_backward(const ConvShape& s, const T* params, const T* x, const T* dy, T* grad,
                   T* dx) {
  for (int oc = 0; oc < s.out_c; ++oc) {
    for (int oy = 0; oy < s.out_h; ++oy) {
      for (int ox = 0; ox < s.out_w; ++ox) {
        const T g = dy[(static_cast<size_t>(oc) * s.out_h + oy) * s.out_w + ox];
        grad[s.b + oc] += g;
        for (int ic = 0; ic < s.in_c; ++ic) {
          const size_t xoff = (static_cast<size_t>(ic) * s.in_h + oy * s.stride) * s.in_w +
                              ox * s.stride;
          const size_t woff =
              s.w + ((static_cast<size_t>(oc) * s.in_c + ic) * s.kernel) * s.kernel;
          for (int ky = 0; ky < s.kernel; ++ky) {
            for (int kx = 0; kx < s.kernel; ++kx) {
              const size_t xi = xoff + static_cast<size_t>(ky) * s.in_w + kx;
              const size_t wi = woff + static_cast<size_t>(ky) * s.kernel + kx;
              grad[wi] += g * x[xi];
              if (dx) dx[xi] += g * params[wi];
            }
          }
        }
      }
    }
  }
}

// --- the network ----------------------------------------------------------

// Forward record; reusable as a workspace so repeated passes do not
// reallocate the per-quantile buffers.
template <typename T>
struct NetForward {
  std::vector<std::vector<T>> conv_pre;  // pre-relu activations per conv layer
  std::vector<std::vector<T>> conv_act;
  std::vector<std::vector<T>> trunk_pre;
  std::vector<std::vector<T>> trunk_act;
  std::vector<T> feature;  // post-relu trunk output
  // effective noisy weights/biases for this (params, noise) pair, shared by
  // every quantile sample of the pass: w_eff = w_mu + w_sig * (f_out f_in^T)
  std::vector<T> w_eff[4], b_eff[4];
  struct PerTau {
    T tau;
    std::vector<T> cosf;
    std::vector<T> embed_pre;
    std::vector<T> merged;
    std::vector<T> v_pre, v_act, v_out;
    std::vector<T> a_pre, a_act, a_out;
    std::vector<T> theta;
  };
  std::vector<PerTau> taus;
};

// Scratch buffers for backward().
template <typename T>
struct NetBackwardScratch {
  std::vector<T> dfeature, d_aout, d_vout, d_vact, d_aact, d_merged, d_embed_act, dcur, dprev;
};

template <typename T>
class QuantileNetwork {
 public:
  explicit QuantileNetwork(const ArchSpec& arch) : arch_(arch), layout_(build_layout(arch)) {}

  const ArchSpec& arch() const { return arch_; }
  const NetLayout& layout() const { return layout_; }
  size_t param_count() const { return layout_.param_count; }
  size_t input_size() const {
    return arch_.input_kind == ArchSpec::InputKind::flat
               ? static_cast<size_t>(arch_.flat_dim)
               : static_cast<size_t>(arch_.in_channels) * arch_.in_h * arch_.in_w;
  }

  std::vector<T> init_params(Rng& rng) const;
  NoiseState<T> zero_noise() const;
  NoiseState<T> sample_noise(Rng& rng) const;

  NetForward<T> forward(std::span<const T> state, std::span<const T> taus,
                        const std::vector<T>& params, const NoiseState<T>& noise) const {
    NetForward<T> f;
    forward_into(state, taus, params, noise, f);
    return f;
  }
  void forward_into(std::span<const T> state, std::span<const T> taus,
                    const std::vector<T>& params, const NoiseState<T>& noise,
                    NetForward<T>& out) const;

  // dtheta: per tau sample, gradient w.r.t. theta (size n_actions).
  // Parameter gradients accumulate into `grad` (sized param_count).
  void backward(const NetForward<T>& fwd, std::span<const T> state,
                const std::vector<std::vector<T>>& dtheta, const std::vector<T>& params,
                const NoiseState<T>& noise, std::vector<T>& grad) const {
    NetBackwardScratch<T> scratch;
    backward_scratch(fwd, state, dtheta, params, noise, grad, scratch);
  }
  void backward_scratch(const NetForward<T>& fwd, std::span<const T> state,
                        const std::vector<std::vector<T>>& dtheta, const std::vector<T>& params,
                        const NoiseState<T>& noise, std::vector<T>& grad,
                        NetBackwardScratch<T>& scratch) const;

  // mean over k sampled quantiles of theta, per action
  std::vector<T> q_values(std::span<const T> state, const std::vector<T>& params,
                          const NoiseState<T>& noise, int k, Rng& rng) const;
  void q_values_into(std::span<const T> state, const std::vector<T>& params,
                     const NoiseState<T>& noise, int k, Rng& rng, NetForward<T>& workspace,
                     std::vector<T>& taus_buf, std::vector<T>& q_out) const;

 private:
  void check_state(std::span<const T> state) const {
    if (state.size() != input_size())
      raise(ErrorCode::invalid_argument, "state size mismatch: got " +
                                             std::to_string(state.size()) + ", want " +
                                             std::to_string(input_size()));
  }
  ArchSpec arch_;
  NetLayout layout_;
};

// --- loss, targets, priorities, optimizer ---------------------------------

struct LossConfig {
  int n_tau = 8;        // online quantile samples N
  int n_tau_prime = 8;  // target quantile samples N'
  double kappa = 1.0;
  double gamma = 0.99;
  int n_step = 3;
  int k_action = 32;  // quantile draws behind q_values/argmax
  double priority_floor = 1e-6;

  void validate() const;
};

// Pairwise asymmetric Huber over online x target samples: mean over online
// samples, sum over target samples. Returns the per-transition loss and its
// gradient w.r.t. each online quantile value.
template <typename T>
struct QuantileHuber {
  T loss;
  std::vector<T> dtheta;
};

template <typename T>
QuantileHuber<T> quantile_huber_loss(std::span<const T> theta, std::span<const T> taus,
                                     std::span<const T> targets, T kappa) {
  if (kappa <= 0) raise(ErrorCode::invalid_argument, "kappa must be positive");
  if (theta.size() != taus.size())
    raise(ErrorCode::invalid_argument, "theta/tau size mismatch");
  QuantileHuber<T> out;
  out.loss = 0;
  out.dtheta.assign(theta.size(), T(0));
  const T inv_n = T(1) / static_cast<T>(theta.size());
  for (size_t i = 0; i < theta.size(); ++i) {
    for (size_t j = 0; j < targets.size(); ++j) {
      const T u = targets[j] - theta[i];
      const T asym = std::abs(taus[i] - (u < 0 ? T(1) : T(0)));
      T l, dl;  // huber and d(huber)/du
      if (std::abs(u) <= kappa) {
        l = T(0.5) * u * u;
        dl = u;
      } else {
        l = kappa * (std::abs(u) - T(0.5) * kappa);
        dl = u > 0 ? kappa : -kappa;
      }
      out.loss += inv_n * asym * l / kappa;
      out.dtheta[i] -= inv_n * asym * dl / kappa;  // du/dtheta = -1
    }
  }
  return out;
}

inline double priority_of(double per_transition_loss, double floor = 1e-6) {
  if (per_transition_loss < 0) raise(ErrorCode::invalid_argument, "loss must be nonnegative");
  return per_transition_loss + floor;
}

// Double-Q distributional target: action by the online net, quantile values
// by the target net; no gradient flows here.
template <typename T>
struct TargetSamples {
  std::vector<T> y;
  int argmax_action = 0;
};

template <typename T>
TargetSamples<T> build_target(const QuantileNetwork<T>& net, std::span<const T> next_state,
                              T n_step_return, T discount_pow_n, const std::vector<T>& online,
                              const NoiseState<T>& online_noise, const std::vector<T>& target,
                              const NoiseState<T>& target_noise, const LossConfig& cfg,
                              Rng& rng) {
  TargetSamples<T> out;
  if (discount_pow_n == T(0)) {
    out.y.assign(cfg.n_tau_prime, n_step_return);  // terminal: no bootstrap
    return out;
  }
  auto q = net.q_values(next_state, online, online_noise, cfg.k_action, rng);
  int best = 0;
  for (size_t a = 1; a < q.size(); ++a)
    if (q[a] > q[best]) best = static_cast<int>(a);
  out.argmax_action = best;
  auto taus = sample_taus<T>(cfg.n_tau_prime, rng);
  auto fwd = net.forward(next_state, taus, target, target_noise);
  out.y.resize(cfg.n_tau_prime);
  for (int j = 0; j < cfg.n_tau_prime; ++j)
    out.y[j] = n_step_return + discount_pow_n * fwd.taus[j].theta[best];
  return out;
}

// Per-transition quantile-Huber loss under given online/target parameters;
// the actor-side pre-insertion priority path uses its local copy for both.
template <typename T>
double transition_loss(const QuantileNetwork<T>& net, std::span<const T> obs,
                       std::span<const T> next_obs, int action, T n_step_return,
                       T discount_pow_n, const std::vector<T>& online,
                       const NoiseState<T>& online_noise, const std::vector<T>& target,
                       const NoiseState<T>& target_noise, const LossConfig& cfg, Rng& rng) {
  auto targets = build_target<T>(net, next_obs, n_step_return, discount_pow_n, online,
                                 online_noise, target, target_noise, cfg, rng);
  auto taus = sample_taus<T>(cfg.n_tau, rng);
  auto fwd = net.forward(obs, taus, online, online_noise);
  std::vector<T> theta(taus.size());
  for (size_t i = 0; i < taus.size(); ++i) theta[i] = fwd.taus[i].theta[action];
  auto qh = quantile_huber_loss<T>(theta, taus, targets.y, static_cast<T>(cfg.kappa));
  return static_cast<double>(qh.loss);
}

struct AdamConfig {
  double lr = 5e-5;        // adaptive-moment defaults from the cited works
  double eps = 3.125e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
};

template <typename T>
struct AdamState {
  std::vector<T> m, v;
  long t = 0;
};

template <typename T>
void adam_step(std::vector<T>& params, const std::vector<T>& grads, const AdamConfig& cfg,
               AdamState<T>& state) {
  if (params.size() != grads.size())
    raise(ErrorCode::invalid_argument, "parameter/gradient size mismatch");
  if (state.m.empty()) {
    state.m.assign(params.size(), T(0));
    state.v.assign(params.size(), T(0));
  }
  state.t += 1;
  const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
  const T bc1 = T(1) - static_cast<T>(std::pow(cfg.beta1, state.t));
  const T bc2 = T(1) - static_cast<T>(std::pow(cfg.beta2, state.t));
  const T lr = static_cast<T>(cfg.lr), eps = static_cast<T>(cfg.eps);
  for (size_t i = 0; i < params.size(); ++i) {
    const T g = grads[i];
    if (std::isnan(g)) raise(ErrorCode::numeric, "NaN gradient in adam_step");
    state.m[i] = b1 * state.m[i] + (T(1) - b1) * g;
    state.v[i] = b2 * state.v[i] + (T(1) - b2) * g * g;
    const T mhat = state.m[i] / bc1;
    const T vhat = state.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

// --- checkpoints -----------------------------------------------------------

template <typename T>
std::vector<uint8_t> params_to_blob(const ArchSpec& arch, const std::vector<T>& params);
template <typename T>
std::vector<T> params_from_blob(const std::vector<uint8_t>& blob, ArchSpec* arch_out);

template <typename T>
void save_checkpoint(const std::string& path, const ArchSpec& arch,
                     const std::vector<T>& params);
template <typename T>
std::vector<T> load_checkpoint(const std::string& path, ArchSpec* arch_out);

extern template class QuantileNetwork<float>;
extern template class QuantileNetwork<double>;
extern template std::vector<uint8_t> params_to_blob<float>(const ArchSpec&,
                                                           const std::vector<float>&);
extern template std::vector<uint8_t> params_to_blob<double>(const ArchSpec&,
                                                            const std::vector<double>&);
extern template std::vector<float> params_from_blob<float>(const std::vector<uint8_t>&,
                                                           ArchSpec*);
extern template std::vector<double> params_from_blob<double>(const std::vector<uint8_t>&,
                                                             ArchSpec*);
extern template void save_checkpoint<float>(const std::string&, const ArchSpec&,
                                            const std::vector<float>&);
extern template void save_checkpoint<double>(const std::string&, const ArchSpec&,
                                             const std::vector<double>&);
extern template std::vector<float> load_checkpoint<float>(const std::string&, ArchSpec*);
extern template std::vector<double> load_checkpoint<double>(const std::string&, ArchSpec*);

}  // namespace saber
