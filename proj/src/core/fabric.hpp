#pragma once

#include <atomic>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "core/env.hpp"
#include "core/net.hpp"
#include "core/replay.hpp"
#include "core/sockets.hpp"
#include "core/toy_games.hpp"
#include "core/wire.hpp"

namespace saber {

// Actor/learner/replay topology: actors play episodes and ship transitions
// with locally computed priorities to the replay service; one learner samples,
// updates priorities and publishes parameter snapshots.

// Synchronizes one learner step per `ratio` actor environment steps. The
// actor runs free until the learner performs its first step (replay fill),
// after which learner_steps <= env_steps / ratio + 1 holds at all times.
class LockstepGate {
 public:
  explicit LockstepGate(int ratio = 4, bool enabled = true)
      : ratio_(ratio), enabled_(enabled) {}

  void actor_tick() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] {
      return !enabled_ || !learner_started_ || env_ + 1 <= (learner_ + 1) * ratio_;
    });
    env_ += 1;
    cv_.notify_all();
  }

  // Blocks until a step is allowed; false once the actor is done and the
  // remaining quota is exhausted.
  bool learner_tick() {
    std::unique_lock lock(mu_);
    learner_started_ = true;
    cv_.notify_all();
    cv_.wait(lock, [&] {
      return !enabled_ || (learner_ + 1) * ratio_ <= env_ || actor_done_;
    });
    if (enabled_ && (learner_ + 1) * ratio_ > env_) return false;
    learner_ += 1;
    cv_.notify_all();
    return true;
  }

  void set_actor_done() {
    std::lock_guard lock(mu_);
    actor_done_ = true;
    cv_.notify_all();
  }

  long env_steps() const {
    std::lock_guard lock(mu_);
    return env_;
  }
  long learner_steps() const {
    std::lock_guard lock(mu_);
    return learner_;
  }
  int ratio() const { return ratio_; }
  bool enabled() const { return enabled_; }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  int ratio_;
  bool enabled_;
  long env_ = 0;
  long learner_ = 0;
  bool learner_started_ = false;
  bool actor_done_ = false;
};

// Downsample a stacked 84x84 observation to stack * edge * edge features.
std::vector<float> downsample_observation(const float* obs, int stack, int edge);
std::vector<uint8_t> feature_bytes(const std::vector<float>& features);
std::vector<float> features_from_bytes(const std::vector<uint8_t>& bytes);

// A transition together with its observation payloads.
struct OutTransition {
  Transition t;
  std::vector<uint8_t> obs;
  std::vector<uint8_t> next_obs;
};

// Actor exploration on top of the noisy network. The default (all zeros)
// is noisy-only; an epsilon schedule mixes in uniform random actions,
// annealed linearly over decay_steps.
struct ExplorationConfig {
  double epsilon_start = 0.0;
  double epsilon_end = 0.0;
  long decay_steps = 1;

  double epsilon_at(long env_step) const {
    if (decay_steps <= 0) return epsilon_end;
    const double f = std::min(1.0, static_cast<double>(env_step) / decay_steps);
    return epsilon_start + (epsilon_end - epsilon_start) * f;
  }
};

// Environment + feature extraction + n-step assembly + pre-insertion
// priorities for one actor stream. Single-threaded.
class ActorStepper {
 public:
  ActorStepper(Emulator& emulator, const SaberConfig& env_config, const LossConfig& loss,
               int n_step, double gamma, int feature_edge, uint64_t seed,
               const ExplorationConfig& exploration = {});

  struct Emitted {
    std::vector<OutTransition> transitions;
    bool episode_end = false;
    double episode_score = 0.0;
  };

  // One environment step under the given parameter snapshot.
  Emitted step(const QuantileNetwork<float>& net, const std::vector<float>& params);

  // Drops the unfinished n-step tail (used when a budget cuts an episode).
  void abandon_window() { assembler_.clear(); }

  long env_steps() const { return env_steps_; }
  long episodes() const { return episodes_; }
  const std::vector<double>& episode_scores() const { return episode_scores_; }
  int feature_dim() const { return feature_dim_; }

 private:
  const std::vector<uint8_t>& blob_for(uint64_t key) const;
  void start_episode();

  SaberEnv env_;
  LossConfig loss_;
  NStepAssembler assembler_;
  int feature_edge_;
  int feature_dim_;
  ExplorationConfig exploration_;
  Rng rng_;
  std::vector<float> features_;      // current observation features
  uint64_t feature_key_ = 0;
  std::vector<std::pair<uint64_t, std::vector<uint8_t>>> recent_blobs_;  // last n+2 features
  long env_steps_ = 0;
  long episodes_ = 0;
  std::vector<double> episode_scores_;
};

// --- wire clients -----------------------------------------------------------

class ReplayClient {
 public:
  explicit ReplayClient(const std::string& address);
  explicit ReplayClient(TcpStream stream) : stream_(std::move(stream)) {}
  uint64_t put(const std::vector<OutTransition>& transitions);  // returns ack count
  WireSampleResponse sample(int batch, double beta);
  uint64_t update_priorities(const std::vector<uint32_t>& slots,
                             const std::vector<uint32_t>& versions,
                             const std::vector<double>& priorities);
  WireStats stats();

 private:
  WireMessage request(const WireMessage& message);
  TcpStream stream_;
};

class ParamClient {
 public:
  explicit ParamClient(const std::string& address);
  explicit ParamClient(TcpStream stream) : stream_(std::move(stream)) {}
  WireParamResponse fetch();

 private:
  TcpStream stream_;
};

// Serves the latest published parameter snapshot.
class ParamServer {
 public:
  explicit ParamServer(const std::string& bind_address);
  ~ParamServer();
  void start();
  void stop();
  void publish(uint64_t version, std::vector<uint8_t> blob);
  uint64_t version() const;
  std::string address() const;

 private:
  struct Connection {
    TcpStream stream;
    std::thread thread;
  };
  void accept_loop();
  void serve_connection(TcpStream& stream);

  TcpListener listener_;
  std::thread accept_thread_;
  std::vector<std::unique_ptr<Connection>> connections_;
  std::mutex conn_mu_;
  std::atomic<bool> running_{false};
  mutable std::mutex param_mu_;
  uint64_t version_ = 0;
  std::vector<uint8_t> blob_;
  bool published_ = false;
};

// --- learner -----------------------------------------------------------------

// Sample batch -> loss/gradients -> optimizer -> fresh priorities. Shared by
// the distributed learner and the single-process trainer.
class LearnerCore {
 public:
  LearnerCore(const ArchSpec& arch, const LossConfig& loss, const AdamConfig& adam,
              uint64_t seed);

  struct Outcome {
    double mean_loss = 0.0;
    std::vector<double> fresh_priorities;  // per transition, floor applied
  };

  Outcome learn(const std::vector<Transition>& transitions,
                const std::vector<std::vector<uint8_t>>& obs,
                const std::vector<std::vector<uint8_t>>& next_obs,
                const std::vector<double>& is_weights);
  Outcome learn(const SampleBatch& batch) {
    return learn(batch.transitions, batch.obs, batch.next_obs, batch.is_weights);
  }

  void sync_target() { target_ = params_; }
  const std::vector<float>& params() const { return params_; }
  const QuantileNetwork<float>& net() const { return net_; }
  long steps() const { return steps_; }
  double last_loss() const { return last_loss_; }

 private:
  QuantileNetwork<float> net_;
  LossConfig loss_;
  AdamConfig adam_cfg_;
  std::vector<float> params_, target_, grad_;
  AdamState<float> adam_;
  Rng rng_;
  long steps_ = 0;
  double last_loss_ = 0.0;
  // reusable workspaces; learn() is single-threaded per instance
  NetForward<float> fwd_ws_, target_ws_, q_ws_;
  NetBackwardScratch<float> bw_ws_;
  std::vector<float> q_buf_, q_taus_, taus_, target_taus_, y_, theta_;
  std::vector<std::vector<float>> dtheta_;
};

// --- distributed roles -------------------------------------------------------

struct ActorRunConfig {
  std::string game_id = "toy:chain";
  std::string replay_address;
  std::string learner_address;
  SaberConfig env;
  LossConfig loss;
  ExplorationConfig exploration;  // default: noisy-network only
  int n_step = 3;
  double gamma = 0.99;
  int feature_edge = 10;
  long env_step_budget = 50'000;
  long transition_budget = 0;  // when > 0: ship exactly this many transitions
  int put_batch_size = 16;
  int param_refresh_interval = 400;  // env steps between parameter fetches
  int connect_retries = 20;
  int retry_delay_ms = 100;
  uint64_t seed = 0;
};

struct ActorRunResult {
  long env_steps = 0;
  long episodes = 0;
  uint64_t transitions_sent = 0;
  uint64_t acked = 0;
  uint64_t final_param_version = 0;
  std::vector<double> episode_scores;
};

ActorRunResult actor_run(const ActorRunConfig& config, LockstepGate* gate = nullptr);

struct LearnerRunConfig {
  std::string replay_address;
  std::string bind_address = "127.0.0.1:0";
  ArchSpec arch;
  LossConfig loss;
  AdamConfig adam;
  int batch_size = 32;
  long min_fill = 1000;
  long total_steps = 12'500;
  int target_sync_interval = 500;
  int publish_interval = 100;
  long checkpoint_interval = 100'000;
  std::string checkpoint_dir;  // empty: no checkpoint files
  double beta_start = 0.4, beta_end = 1.0;
  long min_fill_timeout_ms = 0;  // 0: wait forever
  uint64_t seed = 0;
};

struct LearnerRunResult {
  long steps = 0;
  uint64_t published_version = 0;
  double last_loss = 0.0;
  bool timed_out_waiting_for_fill = false;
};

// Binds the parameter service on construction so actors can be pointed at
// param_address() before run() starts.
class LearnerNode {
 public:
  explicit LearnerNode(const LearnerRunConfig& config);
  std::string param_address() const { return server_.address(); }
  LearnerRunResult run(LockstepGate* gate = nullptr);
  const LearnerCore& core() const { return core_; }

 private:
  LearnerRunConfig config_;
  LearnerCore core_;
  ParamServer server_;
};

}  // namespace saber
