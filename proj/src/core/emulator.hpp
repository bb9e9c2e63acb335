#pragma once

#include <cstdint>
#include <memory>
#include <string>

namespace saber {

// Capability contract any game backend must provide. Backends are
// deterministic given seed and action sequence; stochasticity is injected
// only by the sticky-action wrapper. All 18 console actions must be
// accepted (unused ones act as no-ops).
//
// Call sequence: reset(seed) once, then advance_one_frame(action) until the
// returned bundle reports game_over. Stepping a finished game is a contract
// error. The rgb pointer stays valid until the next advance/reset call.

inline constexpr int kActionSetSize = 18;

// Console action indices used by the toy games.
enum Action : int {
  kActionNoop = 0,
  kActionFire = 1,
  kActionUp = 2,
  kActionRight = 3,
  kActionLeft = 4,
  kActionDown = 5,
};

struct FrameSize {
  int height = 0;
  int width = 0;
};

struct EmulatorFrame {
  double raw_reward = 0.0;
  const uint8_t* rgb = nullptr;  // height*width*3 interleaved
  int lives = 0;
  bool game_over = false;
};

class Emulator {
 public:
  virtual ~Emulator() = default;
  virtual void reset(uint64_t seed) = 0;
  virtual EmulatorFrame advance_one_frame(int action) = 0;
  virtual FrameSize frame_size() const = 0;
  virtual const uint8_t* current_frame() const = 0;
  virtual int lives() const = 0;
  virtual bool game_over() const = 0;
};

}  // namespace saber
