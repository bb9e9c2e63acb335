#include "core/image.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "core/error.hpp"

namespace saber {

namespace {
constexpr float kLumR = 0.299f, kLumG = 0.587f, kLumB = 0.114f;

struct Tap {
  int lo, hi;
  float t;
};

Tap tap_for(int dst, int dst_n, int src_n) {
  // half-pixel centers, clamped to the valid range
  float pos = (static_cast<float>(dst) + 0.5f) * static_cast<float>(src_n) /
                  static_cast<float>(dst_n) -
              0.5f;
  pos = std::clamp(pos, 0.0f, static_cast<float>(src_n - 1));
  int lo = static_cast<int>(pos);
  int hi = std::min(lo + 1, src_n - 1);
  return {lo, hi, pos - static_cast<float>(lo)};
}

inline float lerp(float a, float b, float t) { return a + t * (b - a); }
}  // namespace

void rgb_to_gray(const uint8_t* rgb, int height, int width, float* gray) {
  if (height < 1 || width < 1) raise(ErrorCode::invalid_argument, "zero-size frame");
  const int n = height * width;
  for (int i = 0; i < n; ++i) {
    const uint8_t* p = rgb + 3 * i;
    gray[i] = kLumR * p[0] + kLumG * p[1] + kLumB * p[2];
  }
}

void bilinear_resize(const float* src, int src_h, int src_w, float* dst, int dst_h, int dst_w) {
  if (src_h < 1 || src_w < 1 || dst_h < 1 || dst_w < 1)
    raise(ErrorCode::invalid_argument, "zero-size frame");
  std::vector<Tap> cols(dst_w);
  for (int x = 0; x < dst_w; ++x) cols[x] = tap_for(x, dst_w, src_w);
  for (int y = 0; y < dst_h; ++y) {
    Tap ry = tap_for(y, dst_h, src_h);
    const float* row_lo = src + static_cast<size_t>(ry.lo) * src_w;
    const float* row_hi = src + static_cast<size_t>(ry.hi) * src_w;
    float* out = dst + static_cast<size_t>(y) * dst_w;
    for (int x = 0; x < dst_w; ++x) {
      const Tap& rx = cols[x];
      float top = lerp(row_lo[rx.lo], row_lo[rx.hi], rx.t);
      float bottom = lerp(row_hi[rx.lo], row_hi[rx.hi], rx.t);
      out[x] = lerp(top, bottom, ry.t);
    }
  }
}

void preprocess_frame(const uint8_t* rgb, int height, int width, float* out) {
  if (height < 2 || width < 2) raise(ErrorCode::invalid_argument, "frame smaller than 2x2");
  std::vector<float> gray(static_cast<size_t>(height) * width);
  rgb_to_gray(rgb, height, width, gray.data());
  bilinear_resize(gray.data(), height, width, out, kFrameEdge, kFrameEdge);
}

void max_pool_frames(const uint8_t* a, const uint8_t* b, size_t bytes, uint8_t* out) {
  for (size_t i = 0; i < bytes; ++i) out[i] = std::max(a[i], b[i]);
}

}  // namespace saber
