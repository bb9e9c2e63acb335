#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "core/rng.hpp"

namespace saber {

// Prioritized replay with a sum-tree index and producer-supplied priorities:
// transitions arrive with their priority already computed, the store has no
// default-priority path. The priority exponent is applied at leaf-write time
// so sampling is a pure prefix-sum search.

struct Transition {
  uint64_t obs_key = 0;
  uint64_t next_obs_key = 0;
  int action = 0;
  double n_step_return = 0.0;
  double discount_pow_n = 0.0;  // gamma^n, or 0 when a terminal falls within n
  double priority = 0.0;

  bool operator==(const Transition&) const = default;
};

struct ReplayConfig {
  size_t capacity = 1 << 14;
  double omega = 0.2;       // priority exponent
  double beta_start = 0.4;  // importance-sampling exponent schedule
  double beta_end = 1.0;
  int n_step = 3;
  double gamma = 0.99;

  void validate() const;
  double beta_at(double progress) const;  // linear schedule, progress in [0,1]
};

// Binary indexed sum over power-of-two leaves.
class SumTree {
 public:
  explicit SumTree(size_t leaves);
  void set(size_t leaf, double value);
  double leaf(size_t i) const { return nodes_[cap_ + i]; }
  double total() const { return nodes_[1]; }
  size_t leaves() const { return cap_; }
  // index of the leaf holding the given prefix mass in [0, total())
  size_t find_prefix(double mass) const;

 private:
  size_t cap_;
  std::vector<double> nodes_;  // 1-based heap layout, nodes_[1] = root
};

uint64_t blob_key(const void* data, size_t bytes);  // FNV-1a 64

struct SampleBatch {
  std::vector<Transition> transitions;
  std::vector<uint32_t> slots;
  std::vector<uint32_t> versions;  // ring generation per slot, for staleness
  std::vector<double> is_weights;  // max-normalized per batch
  std::vector<std::vector<uint8_t>> obs;       // copied observation blobs
  std::vector<std::vector<uint8_t>> next_obs;
};

struct ReplayStats {
  uint64_t size = 0;
  uint64_t capacity = 0;
  uint64_t insertions = 0;
  uint64_t overwrites = 0;
  uint64_t stale_updates = 0;
  uint64_t samples_served = 0;
  uint64_t blobs = 0;
};

// One writer stream and one sampler stream may run concurrently; each
// operation is atomic under the store mutex.
class ReplayStore {
 public:
  explicit ReplayStore(const ReplayConfig& config, uint64_t seed = 0);

  // Stores the transition (and its observation blobs keyed by content
  // hash), overwriting the oldest slot when full. Returns the slot index.
  uint32_t push(const Transition& t, const std::vector<uint8_t>& obs,
                const std::vector<uint8_t>& next_obs);
  // Keys must already be present (blobs shipped earlier in the batch).
  uint32_t push_keyed(const Transition& t);

  bool put_blob(uint64_t key, const uint8_t* data, size_t bytes);  // false if present
  bool has_blob(uint64_t key) const;
  std::vector<uint8_t> blob_copy(uint64_t key) const;

  SampleBatch sample(int batch, double beta);
  // Returns the number applied; stale slots are skipped and counted.
  size_t update_priorities(const std::vector<uint32_t>& slots,
                           const std::vector<uint32_t>& versions,
                           const std::vector<double>& priorities);

  size_t size() const;
  ReplayStats stats() const;
  const ReplayConfig& config() const { return config_; }

  // Test hook: leaf weights as stored (priority^omega), insertion order.
  std::vector<double> leaf_weights() const;

 private:
  struct Slot {
    Transition t;
    uint32_t version = 0;
    bool used = false;
  };
  void release_blob(uint64_t key);
  void retain_blob(uint64_t key);

  ReplayConfig config_;
  mutable std::mutex mu_;
  SumTree tree_;
  std::vector<Slot> slots_;
  size_t write_cursor_ = 0;
  ReplayStats stats_;
  struct BlobEntry {
    std::vector<uint8_t> bytes;
    uint32_t refs = 0;
  };
  std::unordered_map<uint64_t, BlobEntry> blobs_;
  Rng rng_;
};

// --- n-step assembly ---------------------------------------------------

struct EpisodeStep {
  uint64_t obs_key = 0;
  uint64_t next_obs_key = 0;
  int action = 0;
  double clipped_reward = 0.0;
};

// Pure per-episode assembly: n-step returns over clipped rewards,
// discount_pow_n = gamma^n when the window completes before the terminal,
// 0 otherwise. `terminal` marks whether the episode ended for real; when
// false only transitions with a full n-step window are emitted.
std::vector<Transition> n_step_assemble(const std::vector<EpisodeStep>& steps, int n, double gamma,
                                        bool terminal = true);

// Streaming variant used by actors: emits transitions as soon as their
// window completes; flush() drains the tail when the episode ends.
class NStepAssembler {
 public:
  NStepAssembler(int n, double gamma);
  std::optional<Transition> push(const EpisodeStep& step);
  std::vector<Transition> flush();  // episode ended (terminal)
  void clear();

 private:
  int n_;
  double gamma_;
  std::vector<EpisodeStep> window_;
};

}  // namespace saber
