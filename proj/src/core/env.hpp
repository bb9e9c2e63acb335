#pragma once

#include <functional>
#include <string>
#include <vector>

#include "core/emulator.hpp"
#include "core/image.hpp"
#include "core/rng.hpp"

namespace saber {

// Environment contract enforced over any Emulator backend: sticky actions,
// 18-action set, game-over-only termination, stuck-time and episode caps,
// reward clipping with a rollover guard, and DQN frame preprocessing.

struct SaberConfig {
  double sticky_xi = 0.25;
  int action_set_size = 18;            // fixed under this protocol
  long max_stuck_frames = 18'000;      // 5 min at 60 fps
  long max_episode_frames = 21'600'000;  // 100 h at 60 fps
  int action_repeat = 4;
  int frame_stack = 4;
  uint64_t seed = 0;

  void validate() const;
};

enum class Termination { none, game_over, stuck_timeout, wall_cap_reached, infinite_flag };

const char* to_string(Termination t);
Termination termination_from_string(const std::string& s);

struct EpisodeLog {
  double raw_score = 0.0;       // sum of non-rollover raw rewards
  double clipped_return = 0.0;  // sum of per-step clipped rewards
  long frames = 0;              // emulator frames
  Termination termination = Termination::none;
  long rollover_events = 0;
};

struct ClipResult {
  double clipped = 0.0;
  bool rollover = false;
};

// Rewards at or below -1000 are score-counter rollovers: flagged and
// excluded (clipped contribution 0). Everything else clamps to [-1, 1].
ClipResult clip_reward(double raw);

// Sticky-action executor: each emulator frame repeats the previously
// executed action with probability xi instead of the requested one. The
// previous action starts as NOOP.
class StickyActions {
 public:
  StickyActions(double xi, uint64_t seed) : xi_(xi), rng_(seed) {}
  void reset(uint64_t seed) {
    rng_.reseed(seed);
    prev_ = kActionNoop;
    last_repeated_ = false;
  }
  int execute(int requested) {
    last_repeated_ = xi_ > 0.0 && rng_.bernoulli(xi_);
    prev_ = last_repeated_ ? prev_ : requested;
    return prev_;
  }
  bool last_repeated() const { return last_repeated_; }

 private:
  double xi_;
  int prev_ = kActionNoop;
  bool last_repeated_ = false;
  Rng rng_;
};

// Ring of preprocessed frames; the observation is the most recent
// `depth` frames oldest-first, padding with the earliest frame until
// `depth` frames exist.
class FrameStack {
 public:
  explicit FrameStack(int depth);
  void start(const float* frame);
  void push(const float* frame);
  const float* observation() const { return obs_.data(); }
  int depth() const { return depth_; }
  size_t observation_size() const { return obs_.size(); }

 private:
  void rebuild();
  int depth_;
  int count_ = 0;
  int head_ = 0;  // next write slot
  std::vector<float> ring_;
  std::vector<float> obs_;
};

class SaberEnv {
 public:
  SaberEnv(Emulator& emulator, const SaberConfig& config);

  void reset();

  struct StepResult {
    const float* observation = nullptr;  // frame_stack * 84 * 84, oldest first
    double clipped_reward = 0.0;
    double raw_reward = 0.0;  // non-rollover raw sum over the repeat window
    bool done = false;
    Termination termination = Termination::none;
  };

  // Advances up to action_repeat emulator frames with sticky execution,
  // max-pools the last two raw frames, preprocesses and restacks.
  StepResult step(int requested_action);

  const float* observation() const { return stack_.observation(); }
  size_t observation_size() const { return stack_.observation_size(); }
  const EpisodeLog& log() const { return log_; }
  const SaberConfig& config() const { return config_; }
  bool done() const { return done_; }

 private:
  Termination check_termination(const EmulatorFrame& frame) const;

  Emulator& emulator_;
  SaberConfig config_;
  StickyActions sticky_;
  FrameStack stack_;
  std::vector<uint8_t> pool_[2];  // last two raw frames
  int pool_head_ = 0;
  std::vector<uint8_t> pooled_;
  std::vector<float> processed_;
  EpisodeLog log_;
  long frames_since_reward_ = 0;
  bool done_ = true;  // requires reset() before stepping
};

// Action selector over the stacked observation.
using Policy = std::function<int(const float* observation, int frame_stack, int edge)>;

EpisodeLog run_episode(SaberEnv& env, const Policy& policy);

std::string episode_log_json(const EpisodeLog& log);
EpisodeLog episode_log_from_json(const std::string& line);

}  // namespace saber
