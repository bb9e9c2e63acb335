#include "core/env.hpp"

#include <algorithm>
#include <cstring>

#include <json.hpp>

#include "core/error.hpp"

namespace saber {

void SaberConfig::validate() const {
  if (sticky_xi < 0.0 || sticky_xi > 1.0)
    raise(ErrorCode::invalid_argument, "sticky_xi must lie in [0, 1]");
  if (action_set_size != kActionSetSize)
    raise(ErrorCode::invalid_argument, "action set is fixed at 18 actions");
  if (max_stuck_frames < 1 || max_episode_frames < 1)
    raise(ErrorCode::invalid_argument, "frame limits must be positive");
  if (max_stuck_frames > max_episode_frames)
    raise(ErrorCode::invalid_argument, "max_stuck_frames exceeds max_episode_frames");
  if (action_repeat < 1) raise(ErrorCode::invalid_argument, "action_repeat must be >= 1");
  if (frame_stack < 1) raise(ErrorCode::invalid_argument, "frame_stack must be >= 1");
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::none: return "none";
    case Termination::game_over: return "game_over";
    case Termination::stuck_timeout: return "stuck_timeout";
    case Termination::wall_cap_reached: return "wall_cap_reached";
    case Termination::infinite_flag: return "infinite_flag";
  }
  return "?";
}

Termination termination_from_string(const std::string& s) {
  for (Termination t : {Termination::none, Termination::game_over, Termination::stuck_timeout,
                        Termination::wall_cap_reached, Termination::infinite_flag})
    if (s == to_string(t)) return t;
  raise(ErrorCode::parse, "unknown termination `" + s + "`");
}

ClipResult clip_reward(double raw) {
  if (raw <= -1000.0) return {0.0, true};
  return {std::clamp(raw, -1.0, 1.0), false};
}

FrameStack::FrameStack(int depth) : depth_(depth) {
  if (depth < 1) raise(ErrorCode::invalid_argument, "frame stack depth must be >= 1");
  ring_.resize(static_cast<size_t>(depth) * kFrameEdge * kFrameEdge);
  obs_.resize(ring_.size());
}

void FrameStack::start(const float* frame) {
  count_ = 0;
  head_ = 0;
  push(frame);
}

void FrameStack::push(const float* frame) {
  const size_t n = static_cast<size_t>(kFrameEdge) * kFrameEdge;
  std::memcpy(ring_.data() + static_cast<size_t>(head_) * n, frame, n * sizeof(float));
  head_ = (head_ + 1) % depth_;
  count_ = std::min(count_ + 1, depth_);
  rebuild();
}

void FrameStack::rebuild() {
  const size_t n = static_cast<size_t>(kFrameEdge) * kFrameEdge;
  // oldest-first; before depth_ frames exist, repeat the earliest frame
  for (int i = 0; i < depth_; ++i) {
    int age = depth_ - 1 - i;  // age of the frame for output slot i
    int avail = std::min(age, count_ - 1);
    int slot = (head_ - 1 - avail + 2 * depth_) % depth_;
    std::memcpy(obs_.data() + static_cast<size_t>(i) * n,
                ring_.data() + static_cast<size_t>(slot) * n, n * sizeof(float));
  }
}

SaberEnv::SaberEnv(Emulator& emulator, const SaberConfig& config)
    : emulator_(emulator),
      config_(config),
      sticky_(config.sticky_xi, config.seed ^ 0x5ab3b00cULL),
      stack_(config.frame_stack) {
  config_.validate();
  const FrameSize fs = emulator_.frame_size();
  const size_t bytes = static_cast<size_t>(fs.height) * fs.width * 3;
  pool_[0].resize(bytes);
  pool_[1].resize(bytes);
  pooled_.resize(bytes);
  processed_.resize(static_cast<size_t>(kFrameEdge) * kFrameEdge);
}

void SaberEnv::reset() {
  emulator_.reset(config_.seed);
  sticky_.reset(config_.seed ^ 0x5ab3b00cULL);
  log_ = EpisodeLog{};
  frames_since_reward_ = 0;
  done_ = false;

  const FrameSize fs = emulator_.frame_size();
  const size_t bytes = pool_[0].size();
  std::memcpy(pool_[0].data(), emulator_.current_frame(), bytes);
  std::memcpy(pool_[1].data(), emulator_.current_frame(), bytes);
  pool_head_ = 0;
  preprocess_frame(emulator_.current_frame(), fs.height, fs.width, processed_.data());
  stack_.start(processed_.data());
}

Termination SaberEnv::check_termination(const EmulatorFrame& frame) const {
  if (frame.game_over) return Termination::game_over;  // never on life loss
  if (frames_since_reward_ >= config_.max_stuck_frames) return Termination::stuck_timeout;
  if (log_.frames >= config_.max_episode_frames)
    return frames_since_reward_ < config_.max_stuck_frames ? Termination::infinite_flag
                                                           : Termination::wall_cap_reached;
  return Termination::none;
}

SaberEnv::StepResult SaberEnv::step(int requested_action) {
  if (done_)
    raise(ErrorCode::contract, "step after termination; reset() the environment first");
  if (requested_action < 0 || requested_action >= config_.action_set_size)
    raise(ErrorCode::invalid_argument, "action index out of range");

  const FrameSize fs = emulator_.frame_size();
  const size_t bytes = pool_[0].size();
  double window_raw = 0.0;
  Termination term = Termination::none;

  for (int i = 0; i < config_.action_repeat && term == Termination::none; ++i) {
    const int executed = sticky_.execute(requested_action);
    EmulatorFrame frame;
    try {
      frame = emulator_.advance_one_frame(executed);
    } catch (const Error& e) {
      raise(e.code(), std::string(e.what()) + " (at frame " + std::to_string(log_.frames + 1) + ")");
    }
    log_.frames += 1;

    const ClipResult clip = clip_reward(frame.raw_reward);
    if (clip.rollover) {
      log_.rollover_events += 1;
      frames_since_reward_ += 1;  // a rollover is not a real reward
    } else {
      window_raw += frame.raw_reward;
      log_.raw_score += frame.raw_reward;
      frames_since_reward_ = frame.raw_reward != 0.0 ? 0 : frames_since_reward_ + 1;
    }

    pool_head_ ^= 1;
    std::memcpy(pool_[pool_head_].data(), frame.rgb, bytes);
    term = check_termination(frame);
  }

  max_pool_frames(pool_[0].data(), pool_[1].data(), bytes, pooled_.data());
  preprocess_frame(pooled_.data(), fs.height, fs.width, processed_.data());
  stack_.push(processed_.data());

  StepResult out;
  out.observation = stack_.observation();
  out.clipped_reward = std::clamp(window_raw, -1.0, 1.0);
  out.raw_reward = window_raw;
  out.termination = term;
  out.done = term != Termination::none;
  log_.clipped_return += out.clipped_reward;
  if (out.done) {
    done_ = true;
    log_.termination = term;
  }
  return out;
}

EpisodeLog run_episode(SaberEnv& env, const Policy& policy) {
  env.reset();
  while (!env.done()) {
    int action = policy(env.observation(), env.config().frame_stack, kFrameEdge);
    env.step(action);
  }
  return env.log();
}

std::string episode_log_json(const EpisodeLog& log) {
  nlohmann::ordered_json j;
  j["raw_score"] = log.raw_score;
  j["clipped_return"] = log.clipped_return;
  j["frames"] = log.frames;
  j["termination"] = to_string(log.termination);
  j["rollover_events"] = log.rollover_events;
  return j.dump();
}

EpisodeLog episode_log_from_json(const std::string& line) {
  EpisodeLog log;
  try {
    auto j = nlohmann::json::parse(line);
    log.raw_score = j.at("raw_score").get<double>();
    log.clipped_return = j.at("clipped_return").get<double>();
    log.frames = j.at("frames").get<long>();
    log.termination = termination_from_string(j.at("termination").get<std::string>());
    log.rollover_events = j.at("rollover_events").get<long>();
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::parse, std::string("bad episode log line: ") + e.what());
  }
  return log;
}

}  // namespace saber
