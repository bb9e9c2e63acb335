#include "core/toy_games.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

#include "core/error.hpp"

namespace saber {

namespace {

constexpr int kH = 210, kW = 160;

// Common chassis: 210x160 RGB block renderer + frame/lives bookkeeping.
// Dynamics are pure functions of the frame counter and action history; the
// seed is stored but unused, so every seed sees the identical initial state.
class ToyGame : public Emulator {
 public:
  ToyGame() : frame_(static_cast<size_t>(kH) * kW * 3) {}

  void reset(uint64_t seed) override {
    seed_ = seed;
    frame_count_ = 0;
    game_over_ = false;
    lives_ = 1;
    on_reset();
    render();
  }

  EmulatorFrame advance_one_frame(int action) override {
    if (game_over_) raise(ErrorCode::contract, "advance_one_frame on a finished game");
    if (action < 0 || action >= kActionSetSize)
      raise(ErrorCode::invalid_argument, "action index out of range");
    ++frame_count_;
    double reward = dynamics(action);
    render();
    return {reward, frame_.data(), lives_, game_over_};
  }

  FrameSize frame_size() const override { return {kH, kW}; }
  const uint8_t* current_frame() const override { return frame_.data(); }
  int lives() const override { return lives_; }
  bool game_over() const override { return game_over_; }

 protected:
  virtual void on_reset() = 0;
  virtual double dynamics(int action) = 0;
  virtual void render() = 0;

  void fill(uint8_t r, uint8_t g, uint8_t b) {
    uint8_t* p = frame_.data();
    for (int i = 0; i < kH * kW; ++i) {
      *p++ = r;
      *p++ = g;
      *p++ = b;
    }
  }

  void rect(int y, int x, int h, int w, uint8_t r, uint8_t g, uint8_t b) {
    int y1 = std::clamp(y + h, 0, kH), x1 = std::clamp(x + w, 0, kW);
    y = std::clamp(y, 0, kH);
    x = std::clamp(x, 0, kW);
    for (int yy = y; yy < y1; ++yy) {
      uint8_t* p = frame_.data() + (static_cast<size_t>(yy) * kW + x) * 3;
      for (int xx = x; xx < x1; ++xx) {
        *p++ = r;
        *p++ = g;
        *p++ = b;
      }
    }
  }

  std::vector<uint8_t> frame_;
  long frame_count_ = 0;
  int lives_ = 1;
  bool game_over_ = false;
  uint64_t seed_ = 0;
};

// Pixel layout: dark blue field; chain cells as a gray strip (y 150..180),
// the agent cell white, the goal cell green, the exit hatch red below the
// start; top bar (y 10..20) shows elapsed-time progress in 32 steps.
class ChainGame : public ToyGame {
 public:
  explicit ChainGame(const ChainGameConfig& cfg) : cfg_(cfg) {
    if (cfg.length < 1 || cfg.length > 64) raise(ErrorCode::invalid_argument, "chain length");
    if (cfg.horizon < 1) raise(ErrorCode::invalid_argument, "chain horizon");
  }

 protected:
  void on_reset() override { pos_ = 0; }

  double dynamics(int action) override {
    double reward = 0.0;
    switch (action) {
      case kActionRight:
        if (++pos_ == cfg_.length) {
          reward = 10.0;
          pos_ = 0;
        }
        break;
      case kActionLeft:
        pos_ = std::max(0, pos_ - 1);
        break;
      case kActionDown:
        if (pos_ == 0) {  // the early exit: small payout, episode over
          reward = cfg_.exit_reward;
          game_over_ = true;
        }
        break;
      default:
        break;
    }
    if (frame_count_ >= cfg_.horizon) game_over_ = true;
    return reward;
  }

  void render() override {
    fill(8, 8, 32);
    int cell_w = kW / (cfg_.length + 1);
    for (int i = 0; i <= cfg_.length; ++i) rect(150, i * cell_w + 2, 30, cell_w - 4, 90, 90, 90);
    rect(150, cfg_.length * cell_w + 2, 30, cell_w - 4, 30, 200, 30);  // goal
    rect(150, pos_ * cell_w + 2, 30, cell_w - 4, 255, 255, 255);       // agent
    rect(185, 2, 20, cell_w - 4, 200, 40, 40);                         // exit hatch
    int steps = static_cast<int>(32 * frame_count_ / cfg_.horizon);
    rect(10, 0, 10, steps * (kW / 32), 220, 200, 40);
  }

 private:
  ChainGameConfig cfg_;
  int pos_ = 0;
};

// Pixel layout: black field; one red block (y 10..30) per remaining life;
// cyan block cycling along the bottom with the reward phase.
class LivesGame : public ToyGame {
 public:
  explicit LivesGame(int lives) : start_lives_(lives) {
    if (lives < 1) raise(ErrorCode::invalid_argument, "lives must be >= 1");
  }

 protected:
  void on_reset() override { lives_ = start_lives_; }

  double dynamics(int action) override {
    if (action == kActionDown) {  // hazard
      if (--lives_ == 0) game_over_ = true;
      return 0.0;
    }
    return frame_count_ % 10 == 0 ? 1.0 : 0.0;
  }

  void render() override {
    fill(0, 0, 0);
    for (int i = 0; i < lives_; ++i) rect(10, 10 + i * 26, 20, 20, 220, 40, 40);
    rect(180, static_cast<int>(frame_count_ % 10) * 16, 20, 14, 40, 200, 220);
  }

 private:
  int start_lives_;
};

// Never rewards, never ends. The display animates for 100 frames and then
// freezes, mimicking a hung emulator.
class StuckGame : public ToyGame {
 protected:
  void on_reset() override {}
  double dynamics(int) override { return 0.0; }
  void render() override {
    fill(20, 20, 20);
    long t = std::min<long>(frame_count_, 100);
    rect(100, static_cast<int>(t % 140), 24, 20, 230, 230, 230);
  }
};

// Score counter wraps at 1,000,000: the frame on which the internal score
// would reach 1M emits a raw reward of exactly -1,000,000 instead. The game
// ends 100 frames after the first wrap.
class RolloverGame : public ToyGame {
 public:
  explicit RolloverGame(double increment) : increment_(increment) {
    if (increment <= 0) raise(ErrorCode::invalid_argument, "increment must be positive");
  }

 protected:
  void on_reset() override {
    displayed_ = 0.0;
    wrap_frame_ = -1;
  }

  double dynamics(int) override {
    double reward;
    if (displayed_ + increment_ >= 1'000'000.0) {
      reward = -1'000'000.0;
      displayed_ = displayed_ + increment_ - 1'000'000.0;
      if (wrap_frame_ < 0) wrap_frame_ = frame_count_;
    } else {
      reward = increment_;
      displayed_ += increment_;
    }
    if (wrap_frame_ >= 0 && frame_count_ >= wrap_frame_ + 100) game_over_ = true;
    return reward;
  }

  void render() override {
    fill(0, 16, 0);
    int h = static_cast<int>(190.0 * displayed_ / 1'000'000.0);
    rect(200 - h, 60, h, 40, 60, 220, 60);
  }

 private:
  double increment_;
  double displayed_ = 0.0;
  long wrap_frame_ = -1;
};

// Yields nothing until FIRE is pressed; a hazard (DOWN) costs a life and
// requires FIRE again before rewards resume. Rewards: +1 every 5th running
// frame.
class FireStartGame : public ToyGame {
 public:
  explicit FireStartGame(int lives) : start_lives_(lives) {
    if (lives < 1) raise(ErrorCode::invalid_argument, "lives must be >= 1");
  }

 protected:
  void on_reset() override {
    lives_ = start_lives_;
    started_ = false;
    run_frames_ = 0;
  }

  double dynamics(int action) override {
    if (!started_) {
      if (action == kActionFire) {
        started_ = true;
        run_frames_ = 0;
      }
      return 0.0;
    }
    if (action == kActionDown) {  // hazard: lose a life, wait for FIRE again
      started_ = false;
      if (--lives_ == 0) game_over_ = true;
      return 0.0;
    }
    return ++run_frames_ % 5 == 0 ? 1.0 : 0.0;
  }

  void render() override {
    fill(started_ ? 0 : 60, started_ ? 60 : 0, 0);
    for (int i = 0; i < lives_; ++i) rect(10, 10 + i * 26, 20, 20, 220, 220, 40);
    if (started_) rect(120, static_cast<int>(run_frames_ % 5) * 30, 30, 26, 40, 220, 40);
  }

 private:
  int start_lives_;
  bool started_ = false;
  long run_frames_ = 0;
};

// +1 every `period` frames, forever.
class LoopGame : public ToyGame {
 public:
  explicit LoopGame(int period) : period_(period) {
    if (period < 1) raise(ErrorCode::invalid_argument, "period must be >= 1");
  }

 protected:
  void on_reset() override {}
  double dynamics(int) override { return frame_count_ % period_ == 0 ? 1.0 : 0.0; }
  void render() override {
    fill(30, 10, 0);
    int phase = static_cast<int>(frame_count_ % period_);
    rect(90, (phase * kW / period_) % (kW - 20), 30, 20, 240, 140, 20);
  }

 private:
  int period_;
};

}  // namespace

std::unique_ptr<Emulator> make_chain_game(const ChainGameConfig& cfg) {
  return std::make_unique<ChainGame>(cfg);
}
std::unique_ptr<Emulator> make_lives_game(int lives) { return std::make_unique<LivesGame>(lives); }
std::unique_ptr<Emulator> make_stuck_game() { return std::make_unique<StuckGame>(); }
std::unique_ptr<Emulator> make_rollover_game(double increment) {
  return std::make_unique<RolloverGame>(increment);
}
std::unique_ptr<Emulator> make_fire_start_game(int lives) {
  return std::make_unique<FireStartGame>(lives);
}
std::unique_ptr<Emulator> make_loop_game(int period) { return std::make_unique<LoopGame>(period); }

const std::vector<std::string>& toy_game_ids() {
  static const std::vector<std::string> ids = {"toy:chain",    "toy:lives",     "toy:stuck",
                                               "toy:rollover", "toy:firestart", "toy:loop"};
  return ids;
}

std::unique_ptr<Emulator> make_toy_game(const std::string& id) {
  if (id == "toy:chain") return make_chain_game({});
  if (id == "toy:lives") return make_lives_game();
  if (id == "toy:stuck") return make_stuck_game();
  if (id == "toy:rollover") return make_rollover_game();
  if (id == "toy:firestart") return make_fire_start_game();
  if (id == "toy:loop") return make_loop_game();
  raise(ErrorCode::invalid_argument, "unknown game id `" + id + "`");
}

double chain_game_optimal_return(const ChainGameConfig& cfg) {
  // Exhaustive value sweep over positions: the dynamics are deterministic,
  // so this bounds every action sequence. value[p] holds the best return
  // with t frames remaining.
  const int positions = cfg.length;  // 0 .. length-1
  std::vector<double> value(positions, 0.0);
  std::vector<double> next(positions, 0.0);
  for (int t = 0; t < cfg.horizon; ++t) {
    for (int p = 0; p < positions; ++p) {
      const int pr = p + 1;
      const double right = pr == cfg.length ? 10.0 + value[0] : value[pr];
      const double left = value[std::max(0, p - 1)];
      const double stay = value[p];
      const double down = p == 0 ? cfg.exit_reward : value[p];  // exit ends the episode
      next[p] = std::max({right, left, stay, down});
    }
    std::swap(value, next);
  }
  return value[0];
}

}  // namespace saber
