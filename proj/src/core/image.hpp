#pragma once

#include <cstdint>
#include <vector>

namespace saber {

// DQN-style frame preprocessing. Grayscale uses NTSC luminance weights
// (0.299/0.587/0.114). Bilinear resize convention, fixed bit-exactly:
// align-corners false with half-pixel centers, i.e. the source coordinate of
// output pixel i is (i + 0.5) * in/out - 0.5, clamped to [0, in-1]. Constant
// inputs are preserved exactly; equal input/output sizes reduce to identity.

inline constexpr int kFrameEdge = 84;  // network input is 84x84

void rgb_to_gray(const uint8_t* rgb, int height, int width, float* gray);

void bilinear_resize(const float* src, int src_h, int src_w, float* dst, int dst_h, int dst_w);

// Grayscale + resize to 84x84 in one pass. `rgb` is H*W*3 interleaved bytes.
void preprocess_frame(const uint8_t* rgb, int height, int width, float* out84x84);

// Element-wise max of two same-size RGB frames.
void max_pool_frames(const uint8_t* a, const uint8_t* b, size_t bytes, uint8_t* out);

}  // namespace saber
