#include "core/fabric.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>

#include "core/error.hpp"
#include "core/image.hpp"

namespace saber {

std::vector<float> downsample_observation(const float* obs, int stack, int edge) {
  std::vector<float> out(static_cast<size_t>(stack) * edge * edge);
  for (int s = 0; s < stack; ++s)
    bilinear_resize(obs + static_cast<size_t>(s) * kFrameEdge * kFrameEdge, kFrameEdge,
                    kFrameEdge, out.data() + static_cast<size_t>(s) * edge * edge, edge, edge);
  // scale into [0, 1] so the first dense layer starts in a sane regime
  for (auto& v : out) v /= 255.0f;
  return out;
}

std::vector<uint8_t> feature_bytes(const std::vector<float>& features) {
  std::vector<uint8_t> bytes(features.size() * sizeof(float));
  std::memcpy(bytes.data(), features.data(), bytes.size());
  return bytes;
}

std::vector<float> features_from_bytes(const std::vector<uint8_t>& bytes) {
  if (bytes.size() % sizeof(float) != 0)
    raise(ErrorCode::parse, "observation blob is not a float vector");
  std::vector<float> out(bytes.size() / sizeof(float));
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

// --- ActorStepper ------------------------------------------------------------

ActorStepper::ActorStepper(Emulator& emulator, const SaberConfig& env_config,
                           const LossConfig& loss, int n_step, double gamma, int feature_edge,
                           uint64_t seed, const ExplorationConfig& exploration)
    : env_(emulator, env_config),
      loss_(loss),
      assembler_(n_step, gamma),
      feature_edge_(feature_edge),
      feature_dim_(env_config.frame_stack * feature_edge * feature_edge),
      exploration_(exploration),
      rng_(seed ^ 0xac7055ULL) {
  start_episode();
}

void ActorStepper::start_episode() {
  env_.reset();
  assembler_.clear();
  features_ = downsample_observation(env_.observation(), env_.config().frame_stack,
                                     feature_edge_);
  auto bytes = feature_bytes(features_);
  feature_key_ = blob_key(bytes.data(), bytes.size());
  recent_blobs_.clear();
  recent_blobs_.emplace_back(feature_key_, std::move(bytes));
}

const std::vector<uint8_t>& ActorStepper::blob_for(uint64_t key) const {
  for (const auto& [k, bytes] : recent_blobs_)
    if (k == key) return bytes;
  raise(ErrorCode::contract, "feature blob expired before its transition was emitted");
}

ActorStepper::Emitted ActorStepper::step(const QuantileNetwork<float>& net,
                                         const std::vector<float>& params) {
  Emitted out;

  // act greedily on the noisy network; an optional epsilon schedule mixes
  // in uniform actions on top
  auto noise = net.sample_noise(rng_);
  auto q = net.q_values(features_, params, noise, loss_.k_action, rng_);
  int action = 0;
  for (size_t a = 1; a < q.size(); ++a)
    if (q[a] > q[action]) action = static_cast<int>(a);
  const double eps = exploration_.epsilon_at(env_steps_);
  if (eps > 0.0 && rng_.bernoulli(eps))
    action = static_cast<int>(rng_.below(kActionSetSize));

  auto result = env_.step(action);
  env_steps_ += 1;

  auto next_features = downsample_observation(result.observation, env_.config().frame_stack,
                                              feature_edge_);
  auto next_bytes = feature_bytes(next_features);
  const uint64_t next_key = blob_key(next_bytes.data(), next_bytes.size());
  recent_blobs_.emplace_back(next_key, std::move(next_bytes));
  // keep the last n+2 feature blobs alive for pending windows
  const size_t keep = static_cast<size_t>(loss_.n_step) + 2;
  while (recent_blobs_.size() > keep)
    recent_blobs_.erase(recent_blobs_.begin());

  EpisodeStep step;
  step.obs_key = feature_key_;
  step.next_obs_key = next_key;
  step.action = action;
  step.clipped_reward = result.clipped_reward;

  std::vector<Transition> ready;
  if (auto t = assembler_.push(step)) ready.push_back(*t);
  if (result.done) {
    for (auto& t : assembler_.flush()) ready.push_back(t);
    out.episode_end = true;
    out.episode_score = env_.log().raw_score;
    episodes_ += 1;
    episode_scores_.push_back(out.episode_score);
  }

  for (auto& t : ready) {
    OutTransition o;
    o.obs = blob_for(t.obs_key);
    o.next_obs = blob_for(t.next_obs_key);
    auto obs_f = features_from_bytes(o.obs);
    auto next_f = features_from_bytes(o.next_obs);
    const double loss = transition_loss<float>(
        net, obs_f, next_f, t.action, static_cast<float>(t.n_step_return),
        static_cast<float>(t.discount_pow_n), params, noise, params, noise, loss_, rng_);
    t.priority = priority_of(loss, loss_.priority_floor);
    o.t = t;
    out.transitions.push_back(std::move(o));
  }

  if (result.done) {
    start_episode();
  } else {
    features_ = std::move(next_features);
    feature_key_ = next_key;
  }
  return out;
}

// --- wire clients ------------------------------------------------------------

namespace {

WireMessage roundtrip(TcpStream& stream, const WireMessage& message) {
  stream.send_frame(encode(message));
  std::vector<uint8_t> frame;
  if (!stream.recv_frame(frame)) raise(ErrorCode::network, "service closed the connection");
  WireMessage reply = decode(frame);
  if (const auto* err = std::get_if<WireError>(&reply))
    raise(ErrorCode::network, "service error " + std::to_string(err->code) + ": " + err->message);
  return reply;
}

template <typename T>
T expect(WireMessage&& reply, const char* what) {
  if (auto* typed = std::get_if<T>(&reply)) return std::move(*typed);
  raise(ErrorCode::network, std::string("unexpected reply to ") + what);
}

TcpStream connect_with_retries(const std::string& address, int retries, int delay_ms) {
  for (int attempt = 0;; ++attempt) {
    try {
      return TcpStream::connect(address);
    } catch (const Error&) {
      if (attempt >= retries) throw;
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
    }
  }
}

}  // namespace

ReplayClient::ReplayClient(const std::string& address) : stream_(TcpStream::connect(address)) {}

WireMessage ReplayClient::request(const WireMessage& message) {
  return roundtrip(stream_, message);
}

uint64_t ReplayClient::put(const std::vector<OutTransition>& transitions) {
  WirePutBatch batch;
  std::vector<uint64_t> seen;
  for (const auto& o : transitions) {
    batch.transitions.push_back(o.t);
    for (const auto* payload : {&o.obs, &o.next_obs}) {
      const uint64_t key = blob_key(payload->data(), payload->size());
      bool dup = false;
      for (uint64_t s : seen) dup = dup || s == key;
      if (!dup) {
        seen.push_back(key);
        batch.blobs.push_back({key, *payload});
      }
    }
  }
  return expect<WireAck>(request(batch), "PutBatch").value;
}

WireSampleResponse ReplayClient::sample(int batch, double beta) {
  return expect<WireSampleResponse>(
      request(WireSampleRequest{static_cast<uint32_t>(batch), beta}), "SampleRequest");
}

uint64_t ReplayClient::update_priorities(const std::vector<uint32_t>& slots,
                                         const std::vector<uint32_t>& versions,
                                         const std::vector<double>& priorities) {
  return expect<WireAck>(request(WirePriorityUpdate{slots, versions, priorities}),
                         "PriorityUpdate")
      .value;
}

WireStats ReplayClient::stats() { return expect<WireStats>(request(WireStats{}), "Stats"); }

ParamClient::ParamClient(const std::string& address) : stream_(TcpStream::connect(address)) {}

WireParamResponse ParamClient::fetch() {
  return expect<WireParamResponse>(roundtrip(stream_, WireParamRequest{}), "ParamRequest");
}

ParamServer::ParamServer(const std::string& bind_address) : listener_(bind_address) {}

ParamServer::~ParamServer() { stop(); }

std::string ParamServer::address() const {
  return "127.0.0.1:" + std::to_string(listener_.port());
}

void ParamServer::start() {
  running_ = true;
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void ParamServer::stop() {
  if (!running_.exchange(false)) return;
  listener_.shutdown();
  if (accept_thread_.joinable()) accept_thread_.join();
  std::lock_guard lock(conn_mu_);
  for (auto& c : connections_) c->stream.shutdown_rw();  // unblock recv before join
  for (auto& c : connections_)
    if (c->thread.joinable()) c->thread.join();
  connections_.clear();
}

void ParamServer::publish(uint64_t version, std::vector<uint8_t> blob) {
  std::lock_guard lock(param_mu_);
  if (published_ && version < version_)
    raise(ErrorCode::contract, "parameter versions must be monotone");
  version_ = version;
  blob_ = std::move(blob);
  published_ = true;
}

uint64_t ParamServer::version() const {
  std::lock_guard lock(param_mu_);
  return version_;
}

void ParamServer::accept_loop() {
  while (running_) {
    TcpStream stream = listener_.accept();
    if (!stream.valid()) break;
    auto conn = std::make_unique<Connection>();
    conn->stream = std::move(stream);
    Connection* raw = conn.get();
    conn->thread = std::thread([this, raw] {
      serve_connection(raw->stream);
      raw->stream.shutdown_rw();  // let the peer observe EOF
    });
    std::lock_guard lock(conn_mu_);
    connections_.push_back(std::move(conn));
  }
}

void ParamServer::serve_connection(TcpStream& stream) {
  std::vector<uint8_t> frame;
  for (;;) {
    try {
      if (!stream.recv_frame(frame)) return;
    } catch (const Error&) {
      return;
    }
    WireMessage reply;
    try {
      const WireMessage request = decode(frame);
      if (std::get_if<WireParamRequest>(&request)) {
        std::lock_guard lock(param_mu_);
        if (!published_)
          reply = WireError{2, "no parameters published yet"};
        else
          reply = WireParamResponse{version_, blob_};
      } else {
        reply = WireError{1, "unsupported message for the parameter service"};
      }
    } catch (const Error& e) {
      std::fprintf(stderr, "[param-service] malformed frame: %s; closing connection\n", e.what());
      return;
    }
    try {
      stream.send_frame(encode(reply));
    } catch (const Error&) {
      return;
    }
  }
}

// --- learner core --------------------------------------------------------------

LearnerCore::LearnerCore(const ArchSpec& arch, const LossConfig& loss, const AdamConfig& adam,
                         uint64_t seed)
    : net_(arch), loss_(loss), adam_cfg_(adam), rng_(seed ^ 0x1ea17ULL) {
  loss_.validate();
  params_ = net_.init_params(rng_);
  target_ = params_;
  grad_.assign(net_.param_count(), 0.0f);
}

LearnerCore::Outcome LearnerCore::learn(const std::vector<Transition>& transitions,
                                        const std::vector<std::vector<uint8_t>>& obs,
                                        const std::vector<std::vector<uint8_t>>& next_obs,
                                        const std::vector<double>& is_weights) {
  const size_t batch = transitions.size();
  if (batch == 0) raise(ErrorCode::invalid_argument, "empty learner batch");
  if (obs.size() != batch || next_obs.size() != batch || is_weights.size() != batch)
    raise(ErrorCode::invalid_argument, "batch array sizes disagree");

  std::fill(grad_.begin(), grad_.end(), 0.0f);
  auto online_noise = net_.sample_noise(rng_);
  auto target_noise = net_.sample_noise(rng_);

  Outcome out;
  out.fresh_priorities.resize(batch);
  double total_loss = 0.0;
  const float inv_batch = 1.0f / static_cast<float>(batch);

  for (size_t i = 0; i < batch; ++i) {
    auto obs_f = features_from_bytes(obs[i]);
    auto next_f = features_from_bytes(next_obs[i]);
    const Transition& t = transitions[i];
    const float ret = static_cast<float>(t.n_step_return);
    const float disc = static_cast<float>(t.discount_pow_n);

    // double-Q distributional target (no gradient)
    if (disc == 0.0f) {
      y_.assign(loss_.n_tau_prime, ret);
    } else {
      net_.q_values_into(next_f, params_, online_noise, loss_.k_action, rng_, q_ws_, q_taus_,
                         q_buf_);
      int best = 0;
      for (size_t a = 1; a < q_buf_.size(); ++a)
        if (q_buf_[a] > q_buf_[best]) best = static_cast<int>(a);
      target_taus_.resize(loss_.n_tau_prime);
      for (auto& tau : target_taus_) tau = static_cast<float>(rng_.uniform_open());
      net_.forward_into(next_f, target_taus_, target_, target_noise, target_ws_);
      y_.resize(loss_.n_tau_prime);
      for (int j = 0; j < loss_.n_tau_prime; ++j)
        y_[j] = ret + disc * target_ws_.taus[j].theta[best];
    }

    taus_.resize(loss_.n_tau);
    for (auto& tau : taus_) tau = static_cast<float>(rng_.uniform_open());
    net_.forward_into(obs_f, taus_, params_, online_noise, fwd_ws_);
    theta_.resize(taus_.size());
    for (size_t k = 0; k < taus_.size(); ++k) theta_[k] = fwd_ws_.taus[k].theta[t.action];
    auto qh = quantile_huber_loss<float>(theta_, taus_, y_, static_cast<float>(loss_.kappa));

    out.fresh_priorities[i] = priority_of(qh.loss, loss_.priority_floor);
    const float w = static_cast<float>(is_weights[i]) * inv_batch;
    total_loss += static_cast<double>(is_weights[i]) * qh.loss;

    dtheta_.resize(taus_.size());
    for (size_t k = 0; k < taus_.size(); ++k) {
      dtheta_[k].assign(net_.arch().n_actions, 0.0f);
      dtheta_[k][t.action] = w * qh.dtheta[k];
    }
    net_.backward_scratch(fwd_ws_, obs_f, dtheta_, params_, online_noise, grad_, bw_ws_);
  }

  out.mean_loss = total_loss / static_cast<double>(batch);
  if (std::isnan(out.mean_loss))
    raise(ErrorCode::numeric, "NaN loss at learner step " + std::to_string(steps_ + 1));
  adam_step(params_, grad_, adam_cfg_, adam_);
  steps_ += 1;
  last_loss_ = out.mean_loss;
  return out;
}

// --- distributed roles -----------------------------------------------------------

ActorRunResult actor_run(const ActorRunConfig& config, LockstepGate* gate) {
  // both services must be reachable; bounded retries, then give up
  ParamClient params_client(
      connect_with_retries(config.learner_address, config.connect_retries,
                           config.retry_delay_ms));
  WireParamResponse snapshot;
  for (int attempt = 0;; ++attempt) {
    try {
      snapshot = params_client.fetch();
      break;
    } catch (const Error&) {
      if (attempt >= config.connect_retries) throw;
      std::this_thread::sleep_for(std::chrono::milliseconds(config.retry_delay_ms));
    }
  }
  ArchSpec arch;
  std::vector<float> params = params_from_blob<float>(snapshot.blob, &arch);
  QuantileNetwork<float> net(arch);
  uint64_t param_version = snapshot.version;

  ReplayClient replay(
      connect_with_retries(config.replay_address, config.connect_retries,
                           config.retry_delay_ms));
  auto emulator = make_toy_game(config.game_id);
  ActorStepper stepper(*emulator, config.env, config.loss, config.n_step, config.gamma,
                       config.feature_edge, config.seed, config.exploration);
  if (static_cast<int>(net.input_size()) != stepper.feature_dim())
    raise(ErrorCode::validation, "published architecture does not match the feature shape");

  ActorRunResult result;
  std::vector<OutTransition> pending;
  auto sent_or_pending = [&] { return result.transitions_sent + pending.size(); };
  while (stepper.env_steps() < config.env_step_budget) {
    if (config.transition_budget > 0 &&
        sent_or_pending() >= static_cast<uint64_t>(config.transition_budget))
      break;
    if (gate) gate->actor_tick();
    auto emitted = stepper.step(net, params);
    for (auto& t : emitted.transitions) pending.push_back(std::move(t));

    if (pending.size() >= static_cast<size_t>(config.put_batch_size)) {
      result.acked += replay.put(pending);
      result.transitions_sent += pending.size();
      pending.clear();
    }
    if (stepper.env_steps() % config.param_refresh_interval == 0) {
      // bounded retry with reconnection; a learner that stays gone is fatal
      for (int attempt = 0;; ++attempt) {
        try {
          auto fresh = params_client.fetch();
          if (fresh.version < param_version)
            raise(ErrorCode::contract, "parameter version went backwards");
          if (fresh.version > param_version) {
            params = params_from_blob<float>(fresh.blob, nullptr);
            param_version = fresh.version;
          }
          break;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::network || attempt >= config.connect_retries) throw;
          std::this_thread::sleep_for(std::chrono::milliseconds(config.retry_delay_ms));
          try {
            params_client = ParamClient(config.learner_address);
          } catch (const Error&) {
            // keep retrying until the attempt budget runs out
          }
        }
      }
    }
  }
  stepper.abandon_window();  // unfinished n-step tail is dropped, not mislabeled
  if (config.transition_budget > 0) {
    const uint64_t budget = static_cast<uint64_t>(config.transition_budget);
    if (result.transitions_sent + pending.size() > budget)
      pending.resize(budget - result.transitions_sent);
  }
  if (!pending.empty()) {
    result.acked += replay.put(pending);
    result.transitions_sent += pending.size();
    pending.clear();
  }
  if (gate) gate->set_actor_done();

  result.env_steps = stepper.env_steps();
  result.episodes = stepper.episodes();
  result.final_param_version = param_version;
  result.episode_scores = stepper.episode_scores();
  return result;
}

LearnerNode::LearnerNode(const LearnerRunConfig& config)
    : config_(config),
      core_(config.arch, config.loss, config.adam, config.seed),
      server_(config.bind_address) {
  server_.start();
  server_.publish(0, params_to_blob(config_.arch, core_.params()));
}

LearnerRunResult LearnerNode::run(LockstepGate* gate) {
  LearnerRunResult result;
  ReplayClient replay(config_.replay_address);

  // wait for the replay fill
  const auto start = std::chrono::steady_clock::now();
  for (;;) {
    if (replay.stats().size >= static_cast<uint64_t>(config_.min_fill)) break;
    if (config_.min_fill_timeout_ms > 0) {
      const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - start)
                               .count();
      if (elapsed > config_.min_fill_timeout_ms) {
        result.timed_out_waiting_for_fill = true;
        result.published_version = server_.version();
        return result;
      }
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }

  uint64_t version = 0;
  while (core_.steps() < config_.total_steps) {
    if (gate && !gate->learner_tick()) break;  // actor done, quota exhausted
    const double progress =
        static_cast<double>(core_.steps()) / static_cast<double>(std::max<long>(1, config_.total_steps));
    const double beta =
        config_.beta_start + (config_.beta_end - config_.beta_start) * std::min(1.0, progress);
    auto batch = replay.sample(config_.batch_size, beta);
    std::vector<std::vector<uint8_t>> obs, next_obs;
    // blobs arrive keyed; index them per transition
    auto find_blob = [&](uint64_t key) -> const std::vector<uint8_t>& {
      for (const auto& b : batch.blobs)
        if (b.key == key) return b.bytes;
      raise(ErrorCode::network, "sample response is missing an observation blob");
    };
    for (const auto& t : batch.transitions) {
      obs.push_back(find_blob(t.obs_key));
      next_obs.push_back(find_blob(t.next_obs_key));
    }
    auto outcome = core_.learn(batch.transitions, obs, next_obs, batch.is_weights);
    replay.update_priorities(batch.slots, batch.versions, outcome.fresh_priorities);

    if (core_.steps() % config_.target_sync_interval == 0) core_.sync_target();
    if (core_.steps() % config_.publish_interval == 0) {
      version = static_cast<uint64_t>(core_.steps() / config_.publish_interval);
      server_.publish(version, params_to_blob(config_.arch, core_.params()));
    }
    if (!config_.checkpoint_dir.empty() && config_.checkpoint_interval > 0 &&
        core_.steps() % config_.checkpoint_interval == 0) {
      const auto path = config_.checkpoint_dir + "/checkpoint_" +
                        std::to_string(core_.steps()) + ".bin";
      save_checkpoint(path, config_.arch, core_.params());
    }
  }

  result.steps = core_.steps();
  result.published_version = version;
  result.last_loss = core_.last_loss();
  return result;
}

}  // namespace saber
