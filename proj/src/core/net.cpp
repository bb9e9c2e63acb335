#include "core/net.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace saber {

ArchSpec ArchSpec::flat_toy(int input_dim, int hidden, int actions) {
  ArchSpec a;
  a.input_kind = InputKind::flat;
  a.flat_dim = input_dim;
  a.trunk_hidden = hidden;
  a.head_hidden = hidden;
  a.n_actions = actions;
  return a;
}

ArchSpec ArchSpec::conv84(int stack, int actions) {
  ArchSpec a;
  a.input_kind = InputKind::conv;
  a.in_channels = stack;
  a.in_h = 84;
  a.in_w = 84;
  a.conv = {{32, 8, 4}, {64, 4, 2}, {64, 3, 1}};
  a.n_actions = actions;
  a.head_hidden = 512;
  return a;
}

void ArchSpec::validate() const {
  if (n_actions < 1) raise(ErrorCode::invalid_argument, "network needs at least one action");
  if (n_cos < 1) raise(ErrorCode::invalid_argument, "n_cos must be >= 1");
  if (head_hidden < 1) raise(ErrorCode::invalid_argument, "head_hidden must be >= 1");
  if (input_kind == InputKind::flat) {
    if (flat_dim < 1 || trunk_hidden < 1)
      raise(ErrorCode::invalid_argument, "flat trunk dimensions must be positive");
  } else {
    if (conv.empty()) raise(ErrorCode::invalid_argument, "conv trunk needs layers");
    if (in_channels < 1 || in_h < 1 || in_w < 1)
      raise(ErrorCode::invalid_argument, "conv input dimensions must be positive");
  }
}

int ArchSpec::feature_dim() const {
  if (input_kind == InputKind::flat) return trunk_hidden;
  int h = in_h, w = in_w, c = in_channels;
  for (const auto& l : conv) {
    h = (h - l.kernel) / l.stride + 1;
    w = (w - l.kernel) / l.stride + 1;
    c = l.out_channels;
  }
  return c * h * w;
}

std::string ArchSpec::to_json() const {
  nlohmann::ordered_json j;
  j["input_kind"] = input_kind == InputKind::flat ? "flat" : "conv";
  j["flat_dim"] = flat_dim;
  j["trunk_hidden"] = trunk_hidden;
  j["in_channels"] = in_channels;
  j["in_h"] = in_h;
  j["in_w"] = in_w;
  auto conv_arr = nlohmann::ordered_json::array();
  for (const auto& c : conv) conv_arr.push_back({{"out", c.out_channels}, {"k", c.kernel}, {"s", c.stride}});
  j["conv"] = conv_arr;
  j["n_actions"] = n_actions;
  j["n_cos"] = n_cos;
  j["head_hidden"] = head_hidden;
  return j.dump();
}

ArchSpec ArchSpec::from_json(const std::string& text) {
  ArchSpec a;
  try {
    auto j = nlohmann::json::parse(text);
    a.input_kind = j.at("input_kind").get<std::string>() == "flat" ? InputKind::flat : InputKind::conv;
    a.flat_dim = j.at("flat_dim").get<int>();
    a.trunk_hidden = j.at("trunk_hidden").get<int>();
    a.in_channels = j.at("in_channels").get<int>();
    a.in_h = j.at("in_h").get<int>();
    a.in_w = j.at("in_w").get<int>();
    a.conv.clear();
    for (const auto& c : j.at("conv"))
      a.conv.push_back({c.at("out").get<int>(), c.at("k").get<int>(), c.at("s").get<int>()});
    a.n_actions = j.at("n_actions").get<int>();
    a.n_cos = j.at("n_cos").get<int>();
    a.head_hidden = j.at("head_hidden").get<int>();
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::parse, std::string("bad architecture descriptor: ") + e.what());
  }
  a.validate();
  return a;
}

NetLayout build_layout(const ArchSpec& arch) {
  arch.validate();
  NetLayout layout;
  size_t off = 0;
  auto add_dense = [&](int in, int out) {
    DenseShape s;
    s.in = in;
    s.out = out;
    s.w = off;
    off += static_cast<size_t>(in) * out;
    s.b = off;
    off += out;
    return s;
  };
  auto add_noisy = [&](int in, int out) {
    NoisyShape s;
    s.in = in;
    s.out = out;
    s.w_mu = off;
    off += static_cast<size_t>(in) * out;
    s.w_sig = off;
    off += static_cast<size_t>(in) * out;
    s.b_mu = off;
    off += out;
    s.b_sig = off;
    off += out;
    return s;
  };

  if (arch.input_kind == ArchSpec::InputKind::conv) {
    int h = arch.in_h, w = arch.in_w, c = arch.in_channels;
    for (const auto& l : arch.conv) {
      ConvShape s;
      s.in_c = c;
      s.out_c = l.out_channels;
      s.kernel = l.kernel;
      s.stride = l.stride;
      s.in_h = h;
      s.in_w = w;
      s.out_h = (h - l.kernel) / l.stride + 1;
      s.out_w = (w - l.kernel) / l.stride + 1;
      if (s.out_h < 1 || s.out_w < 1)
        raise(ErrorCode::invalid_argument, "conv layer shrinks input below 1x1");
      s.w = off;
      off += static_cast<size_t>(s.out_c) * s.in_c * s.kernel * s.kernel;
      s.b = off;
      off += s.out_c;
      layout.conv.push_back(s);
      h = s.out_h;
      w = s.out_w;
      c = s.out_c;
    }
  } else {
    layout.trunk.push_back(add_dense(arch.flat_dim, arch.trunk_hidden));
    layout.trunk.push_back(add_dense(arch.trunk_hidden, arch.trunk_hidden));
  }
  layout.feature_dim = arch.feature_dim();
  layout.embed = add_dense(arch.n_cos, layout.feature_dim);
  layout.value1 = add_noisy(layout.feature_dim, arch.head_hidden);
  layout.value2 = add_noisy(arch.head_hidden, 1);
  layout.adv1 = add_noisy(layout.feature_dim, arch.head_hidden);
  layout.adv2 = add_noisy(arch.head_hidden, arch.n_actions);
  layout.param_count = off;
  return layout;
}

void LossConfig::validate() const {
  if (n_tau < 1 || n_tau_prime < 1 || k_action < 1)
    raise(ErrorCode::invalid_argument, "quantile sample counts must be >= 1");
  if (kappa <= 0) raise(ErrorCode::invalid_argument, "kappa must be positive");
  if (gamma <= 0 || gamma > 1) raise(ErrorCode::invalid_argument, "gamma must lie in (0, 1]");
  if (n_step < 1) raise(ErrorCode::invalid_argument, "n_step must be >= 1");
  if (priority_floor < 0) raise(ErrorCode::invalid_argument, "priority floor must be >= 0");
}

namespace {

template <typename T>
void relu_inplace(std::vector<T>& v) {
  for (auto& x : v)
    if (x < T(0)) x = T(0);
}

template <typename T>
void uniform_block(std::vector<T>& p, size_t off, size_t count, T bound, Rng& rng) {
  for (size_t i = 0; i < count; ++i)
    p[off + i] = static_cast<T>((rng.uniform() * 2.0 - 1.0)) * bound;
}

}  // namespace

template <typename T>
std::vector<T> QuantileNetwork<T>::init_params(Rng& rng) const {
  std::vector<T> p(layout_.param_count, T(0));
  auto init_dense = [&](const DenseShape& s) {
    const T bound = T(1) / std::sqrt(static_cast<T>(s.in));
    uniform_block(p, s.w, static_cast<size_t>(s.in) * s.out, bound, rng);
    uniform_block(p, s.b, s.out, bound, rng);
  };
  auto init_noisy = [&](const NoisyShape& s) {
    const T bound = T(1) / std::sqrt(static_cast<T>(s.in));
    const T sigma = static_cast<T>(kSigma0) / std::sqrt(static_cast<T>(s.in));
    uniform_block(p, s.w_mu, static_cast<size_t>(s.in) * s.out, bound, rng);
    std::fill_n(p.begin() + s.w_sig, static_cast<size_t>(s.in) * s.out, sigma);
    uniform_block(p, s.b_mu, s.out, bound, rng);
    std::fill_n(p.begin() + s.b_sig, s.out, sigma);
  };
  for (const auto& s : layout_.conv) {
    const T bound = T(1) / std::sqrt(static_cast<T>(s.in_c) * s.kernel * s.kernel);
    uniform_block(p, s.w, static_cast<size_t>(s.out_c) * s.in_c * s.kernel * s.kernel, bound, rng);
    uniform_block(p, s.b, s.out_c, bound, rng);
  }
  for (const auto& s : layout_.trunk) init_dense(s);
  init_dense(layout_.embed);
  init_noisy(layout_.value1);
  init_noisy(layout_.value2);
  init_noisy(layout_.adv1);
  init_noisy(layout_.adv2);
  return p;
}

template <typename T>
NoiseState<T> QuantileNetwork<T>::zero_noise() const {
  NoiseState<T> n;
  for (const NoisyShape* s : {&layout_.value1, &layout_.value2, &layout_.adv1, &layout_.adv2}) {
    typename NoiseState<T>::Layer l;
    l.f_in.assign(s->in, T(0));
    l.f_out.assign(s->out, T(0));
    n.layers.push_back(std::move(l));
  }
  return n;
}

template <typename T>
NoiseState<T> QuantileNetwork<T>::sample_noise(Rng& rng) const {
  NoiseState<T> n;
  for (const NoisyShape* s : {&layout_.value1, &layout_.value2, &layout_.adv1, &layout_.adv2}) {
    typename NoiseState<T>::Layer l;
    l.f_in.resize(s->in);
    l.f_out.resize(s->out);
    for (auto& v : l.f_in) v = noisy_f(static_cast<T>(rng.gaussian()));
    for (auto& v : l.f_out) v = noisy_f(static_cast<T>(rng.gaussian()));
    n.layers.push_back(std::move(l));
  }
  return n;
}

template <typename T>
void QuantileNetwork<T>::forward_into(std::span<const T> state, std::span<const T> taus,
                                      const std::vector<T>& params, const NoiseState<T>& noise,
                                      NetForward<T>& f) const {
  check_state(state);
  if (params.size() != layout_.param_count)
    raise(ErrorCode::invalid_argument, "parameter vector size mismatch");
  if (noise.layers.size() != 4) raise(ErrorCode::invalid_argument, "noise state mismatch");

  // trunk
  const T* cur = state.data();
  if (arch_.input_kind == ArchSpec::InputKind::conv) {
    f.conv_pre.resize(layout_.conv.size());
    f.conv_act.resize(layout_.conv.size());
    for (size_t li = 0; li < layout_.conv.size(); ++li) {
      const auto& s = layout_.conv[li];
      f.conv_pre[li].resize(static_cast<size_t>(s.out_c) * s.out_h * s.out_w);
      conv_forward(s, params.data(), cur, f.conv_pre[li].data());
      f.conv_act[li] = f.conv_pre[li];
      relu_inplace(f.conv_act[li]);
      cur = f.conv_act[li].data();
    }
    f.feature = f.conv_act.back();
  } else {
    f.trunk_pre.resize(layout_.trunk.size());
    f.trunk_act.resize(layout_.trunk.size());
    for (size_t li = 0; li < layout_.trunk.size(); ++li) {
      const auto& s = layout_.trunk[li];
      f.trunk_pre[li].resize(s.out);
      dense_forward(s, params.data(), cur, f.trunk_pre[li].data());
      f.trunk_act[li] = f.trunk_pre[li];
      relu_inplace(f.trunk_act[li]);
      cur = f.trunk_act[li].data();
    }
    f.feature = f.trunk_act.back();
  }

  // materialize each noisy layer once for the whole tau set
  const NoisyShape* noisy[4] = {&layout_.value1, &layout_.value2, &layout_.adv1, &layout_.adv2};
  for (int l = 0; l < 4; ++l) {
    f.w_eff[l].resize(static_cast<size_t>(noisy[l]->in) * noisy[l]->out);
    f.b_eff[l].resize(noisy[l]->out);
    noisy_materialize(*noisy[l], params.data(), noise.layers[l].f_in.data(),
                      noise.layers[l].f_out.data(), f.w_eff[l].data(), f.b_eff[l].data());
  }

  const int d = layout_.feature_dim;
  const int n_actions = arch_.n_actions;
  f.taus.resize(taus.size());
  for (size_t ti = 0; ti < taus.size(); ++ti) {
    auto& pt = f.taus[ti];
    pt.tau = taus[ti];
    pt.cosf.resize(arch_.n_cos);
    for (int i = 0; i < arch_.n_cos; ++i)
      pt.cosf[i] = std::cos(static_cast<T>(M_PI) * static_cast<T>(i) * taus[ti]);
    pt.embed_pre.resize(d);
    dense_forward(layout_.embed, params.data(), pt.cosf.data(), pt.embed_pre.data());
    pt.merged.resize(d);
    for (int i = 0; i < d; ++i) {
      const T e = pt.embed_pre[i] > T(0) ? pt.embed_pre[i] : T(0);
      pt.merged[i] = f.feature[i] * e;
    }
    // value stream
    pt.v_pre.resize(layout_.value1.out);
    noisy_forward_cached(layout_.value1, f.w_eff[0].data(), f.b_eff[0].data(), pt.merged.data(),
                         pt.v_pre.data());
    pt.v_act = pt.v_pre;
    relu_inplace(pt.v_act);
    pt.v_out.resize(1);
    noisy_forward_cached(layout_.value2, f.w_eff[1].data(), f.b_eff[1].data(), pt.v_act.data(),
                         pt.v_out.data());
    // advantage stream
    pt.a_pre.resize(layout_.adv1.out);
    noisy_forward_cached(layout_.adv1, f.w_eff[2].data(), f.b_eff[2].data(), pt.merged.data(),
                         pt.a_pre.data());
    pt.a_act = pt.a_pre;
    relu_inplace(pt.a_act);
    pt.a_out.resize(n_actions);
    noisy_forward_cached(layout_.adv2, f.w_eff[3].data(), f.b_eff[3].data(), pt.a_act.data(),
                         pt.a_out.data());
    pt.theta.resize(n_actions);
    dueling_aggregate<T>(pt.v_out[0], pt.a_out, pt.theta);
  }
}

template <typename T>
void QuantileNetwork<T>::backward_scratch(const NetForward<T>& fwd, std::span<const T> state,
                                          const std::vector<std::vector<T>>& dtheta,
                                          const std::vector<T>& params,
                                          const NoiseState<T>& noise, std::vector<T>& grad,
                                          NetBackwardScratch<T>& ws) const {
  check_state(state);
  if (grad.size() != layout_.param_count)
    raise(ErrorCode::invalid_argument, "gradient vector size mismatch");
  if (dtheta.size() != fwd.taus.size())
    raise(ErrorCode::invalid_argument, "dtheta must cover every tau sample");

  const int d = layout_.feature_dim;
  const int n_actions = arch_.n_actions;
  ws.dfeature.assign(d, T(0));
  ws.d_aout.resize(n_actions);
  ws.d_vout.resize(1);
  ws.d_embed_act.resize(d);

  for (size_t ti = 0; ti < fwd.taus.size(); ++ti) {
    const auto& pt = fwd.taus[ti];
    const auto& dth = dtheta[ti];
    if (static_cast<int>(dth.size()) != n_actions)
      raise(ErrorCode::invalid_argument, "dtheta row size mismatch");

    // dueling: dV = sum(dtheta), dA_a = dtheta_a - mean(dtheta)
    T dsum = 0;
    for (T g : dth) dsum += g;
    const T mean_g = dsum / static_cast<T>(n_actions);
    for (int a = 0; a < n_actions; ++a) ws.d_aout[a] = dth[a] - mean_g;
    ws.d_vout[0] = dsum;

    // value stream
    ws.d_vact.assign(layout_.value1.out, T(0));
    noisy_backward_cached(layout_.value2, fwd.w_eff[1].data(), noise.layers[1].f_in.data(),
                          noise.layers[1].f_out.data(), pt.v_act.data(), ws.d_vout.data(),
                          grad.data(), ws.d_vact.data());
    for (int i = 0; i < layout_.value1.out; ++i)
      if (pt.v_pre[i] <= T(0)) ws.d_vact[i] = T(0);
    ws.d_merged.assign(d, T(0));
    noisy_backward_cached(layout_.value1, fwd.w_eff[0].data(), noise.layers[0].f_in.data(),
                          noise.layers[0].f_out.data(), pt.merged.data(), ws.d_vact.data(),
                          grad.data(), ws.d_merged.data());

    // advantage stream
    ws.d_aact.assign(layout_.adv1.out, T(0));
    noisy_backward_cached(layout_.adv2, fwd.w_eff[3].data(), noise.layers[3].f_in.data(),
                          noise.layers[3].f_out.data(), pt.a_act.data(), ws.d_aout.data(),
                          grad.data(), ws.d_aact.data());
    for (int i = 0; i < layout_.adv1.out; ++i)
      if (pt.a_pre[i] <= T(0)) ws.d_aact[i] = T(0);
    noisy_backward_cached(layout_.adv1, fwd.w_eff[2].data(), noise.layers[2].f_in.data(),
                          noise.layers[2].f_out.data(), pt.merged.data(), ws.d_aact.data(),
                          grad.data(), ws.d_merged.data());

    // merge: m = feature * relu(embed_pre)
    for (int i = 0; i < d; ++i) {
      const T e = pt.embed_pre[i] > T(0) ? pt.embed_pre[i] : T(0);
      ws.dfeature[i] += ws.d_merged[i] * e;
      ws.d_embed_act[i] = pt.embed_pre[i] > T(0) ? ws.d_merged[i] * fwd.feature[i] : T(0);
    }
    dense_backward(layout_.embed, params.data(), pt.cosf.data(), ws.d_embed_act.data(),
                   grad.data(), static_cast<T*>(nullptr));
  }

  // trunk backward with the accumulated feature gradient
  ws.dcur = ws.dfeature;
  if (arch_.input_kind == ArchSpec::InputKind::conv) {
    for (size_t li = layout_.conv.size(); li-- > 0;) {
      const auto& s = layout_.conv[li];
      for (size_t i = 0; i < fwd.conv_pre[li].size(); ++i)
        if (fwd.conv_pre[li][i] <= T(0)) ws.dcur[i] = T(0);
      const T* input = li == 0 ? state.data() : fwd.conv_act[li - 1].data();
      const size_t in_size = static_cast<size_t>(s.in_c) * s.in_h * s.in_w;
      ws.dprev.assign(in_size, T(0));
      conv_backward(s, params.data(), input, ws.dcur.data(), grad.data(),
                    li == 0 ? static_cast<T*>(nullptr) : ws.dprev.data());
      std::swap(ws.dcur, ws.dprev);
    }
  } else {
    for (size_t li = layout_.trunk.size(); li-- > 0;) {
      const auto& s = layout_.trunk[li];
      for (int i = 0; i < s.out; ++i)
        if (fwd.trunk_pre[li][i] <= T(0)) ws.dcur[i] = T(0);
      const T* input = li == 0 ? state.data() : fwd.trunk_act[li - 1].data();
      ws.dprev.assign(s.in, T(0));
      dense_backward(s, params.data(), input, ws.dcur.data(), grad.data(),
                     li == 0 ? static_cast<T*>(nullptr) : ws.dprev.data());
      std::swap(ws.dcur, ws.dprev);
    }
  }
}

template <typename T>
void QuantileNetwork<T>::q_values_into(std::span<const T> state, const std::vector<T>& params,
                                       const NoiseState<T>& noise, int k, Rng& rng,
                                       NetForward<T>& workspace, std::vector<T>& taus_buf,
                                       std::vector<T>& q_out) const {
  if (k < 1) raise(ErrorCode::invalid_argument, "k must be >= 1");
  taus_buf.resize(k);
  for (auto& t : taus_buf) t = static_cast<T>(rng.uniform_open());
  forward_into(state, taus_buf, params, noise, workspace);
  q_out.assign(arch_.n_actions, T(0));
  for (const auto& pt : workspace.taus)
    for (int a = 0; a < arch_.n_actions; ++a) q_out[a] += pt.theta[a];
  for (auto& v : q_out) v /= static_cast<T>(k);
}

template <typename T>
std::vector<T> QuantileNetwork<T>::q_values(std::span<const T> state, const std::vector<T>& params,
                                            const NoiseState<T>& noise, int k, Rng& rng) const {
  NetForward<T> workspace;
  std::vector<T> taus_buf, q;
  q_values_into(state, params, noise, k, rng, workspace, taus_buf, q);
  return q;
}

// --- checkpoints -----------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'S', 'B', 'Q', 'N'};
constexpr uint32_t kFormatVersion = 1;

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(v & 0xff);
  out.push_back((v >> 8) & 0xff);
  out.push_back((v >> 16) & 0xff);
  out.push_back((v >> 24) & 0xff);
}

uint32_t get_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

template <typename T>
const char* dtype_name() {
  return sizeof(T) == 4 ? "f32" : "f64";
}

}  // namespace

template <typename T>
std::vector<uint8_t> params_to_blob(const ArchSpec& arch, const std::vector<T>& params) {
  nlohmann::ordered_json h;
  h["arch"] = nlohmann::json::parse(arch.to_json());
  h["dtype"] = dtype_name<T>();
  h["params"] = params.size();
  const std::string header = h.dump();

  std::vector<uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, kFormatVersion);
  put_u32(out, static_cast<uint32_t>(header.size()));
  out.insert(out.end(), header.begin(), header.end());
  const size_t data_off = out.size();
  out.resize(data_off + params.size() * sizeof(T));
  std::memcpy(out.data() + data_off, params.data(), params.size() * sizeof(T));
  return out;
}

template <typename T>
std::vector<T> params_from_blob(const std::vector<uint8_t>& blob, ArchSpec* arch_out) {
  if (blob.size() < 12 || std::memcmp(blob.data(), kMagic, 4) != 0)
    raise(ErrorCode::parse, "not a parameter blob");
  const uint32_t version = get_u32(blob.data() + 4);
  if (version != kFormatVersion)
    raise(ErrorCode::parse, "unsupported parameter blob version " + std::to_string(version));
  const uint32_t hlen = get_u32(blob.data() + 8);
  if (blob.size() < 12 + static_cast<size_t>(hlen)) raise(ErrorCode::parse, "truncated blob header");
  const std::string header(blob.begin() + 12, blob.begin() + 12 + hlen);
  size_t count = 0;
  ArchSpec arch;
  try {
    auto j = nlohmann::json::parse(header);
    arch = ArchSpec::from_json(j.at("arch").dump());
    if (j.at("dtype").get<std::string>() != dtype_name<T>())
      raise(ErrorCode::parse, "parameter dtype mismatch");
    count = j.at("params").get<size_t>();
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::parse, std::string("bad blob header: ") + e.what());
  }
  const size_t data_off = 12 + hlen;
  if (blob.size() != data_off + count * sizeof(T))
    raise(ErrorCode::parse, "parameter blob length mismatch");
  std::vector<T> params(count);
  std::memcpy(params.data(), blob.data() + data_off, count * sizeof(T));
  if (arch_out) *arch_out = arch;
  return params;
}

template <typename T>
void save_checkpoint(const std::string& path, const ArchSpec& arch,
                     const std::vector<T>& params) {
  auto blob = params_to_blob(arch, params);
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::io, "cannot write checkpoint " + path);
  out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
}

template <typename T>
std::vector<T> load_checkpoint(const std::string& path, ArchSpec* arch_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::io, "cannot read checkpoint " + path);
  std::vector<uint8_t> blob((std::istreambuf_iterator<char>(in)), {});
  return params_from_blob<T>(blob, arch_out);
}

template class QuantileNetwork<float>;
template class QuantileNetwork<double>;
template std::vector<uint8_t> params_to_blob<float>(const ArchSpec&, const std::vector<float>&);
template std::vector<uint8_t> params_to_blob<double>(const ArchSpec&, const std::vector<double>&);
template std::vector<float> params_from_blob<float>(const std::vector<uint8_t>&, ArchSpec*);
template std::vector<double> params_from_blob<double>(const std::vector<uint8_t>&, ArchSpec*);
template void save_checkpoint<float>(const std::string&, const ArchSpec&,
                                     const std::vector<float>&);
template void save_checkpoint<double>(const std::string&, const ArchSpec&,
                                      const std::vector<double>&);
template std::vector<float> load_checkpoint<float>(const std::string&, ArchSpec*);
template std::vector<double> load_checkpoint<double>(const std::string&, ArchSpec*);

}  // namespace saber
