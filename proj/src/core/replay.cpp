#include "core/replay.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace saber {

void ReplayConfig::validate() const {
  if (capacity < 1) raise(ErrorCode::invalid_argument, "replay capacity must be >= 1");
  if (omega < 0.0 || omega > 1.0) raise(ErrorCode::invalid_argument, "omega must lie in [0, 1]");
  if (beta_start < 0.0 || beta_start > 1.0 || beta_end < 0.0 || beta_end > 1.0)
    raise(ErrorCode::invalid_argument, "beta must lie in [0, 1]");
  if (n_step < 1) raise(ErrorCode::invalid_argument, "n_step must be >= 1");
  if (gamma <= 0.0 || gamma > 1.0) raise(ErrorCode::invalid_argument, "gamma must lie in (0, 1]");
}

double ReplayConfig::beta_at(double progress) const {
  progress = std::clamp(progress, 0.0, 1.0);
  return beta_start + (beta_end - beta_start) * progress;
}

namespace {
size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}
}  // namespace

SumTree::SumTree(size_t leaves) : cap_(next_pow2(std::max<size_t>(leaves, 1))) {
  nodes_.assign(2 * cap_, 0.0);
}

void SumTree::set(size_t leaf, double value) {
  if (leaf >= cap_) raise(ErrorCode::invalid_argument, "sum tree leaf out of range");
  size_t i = cap_ + leaf;
  nodes_[i] = value;
  for (i >>= 1; i >= 1; i >>= 1) nodes_[i] = nodes_[2 * i] + nodes_[2 * i + 1];
}

size_t SumTree::find_prefix(double mass) const {
  size_t i = 1;
  while (i < cap_) {
    const double left = nodes_[2 * i];
    if (mass < left) {
      i = 2 * i;
    } else {
      mass -= left;
      i = 2 * i + 1;
    }
  }
  return i - cap_;
}

uint64_t blob_key(const void* data, size_t bytes) {
  const uint8_t* p = static_cast<const uint8_t*>(data);
  uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

ReplayStore::ReplayStore(const ReplayConfig& config, uint64_t seed)
    : config_(config), tree_(config.capacity), slots_(config.capacity), rng_(seed ^ 0x9e11a7ULL) {
  config_.validate();
  stats_.capacity = config_.capacity;
}

void ReplayStore::retain_blob(uint64_t key) {
  auto it = blobs_.find(key);
  if (it == blobs_.end())
    raise(ErrorCode::contract, "transition references a missing observation blob");
  it->second.refs += 1;
}

void ReplayStore::release_blob(uint64_t key) {
  auto it = blobs_.find(key);
  if (it == blobs_.end()) return;
  if (--it->second.refs == 0) blobs_.erase(it);
}

bool ReplayStore::put_blob(uint64_t key, const uint8_t* data, size_t bytes) {
  std::lock_guard lock(mu_);
  auto [it, inserted] = blobs_.try_emplace(key);
  if (inserted) it->second.bytes.assign(data, data + bytes);
  return inserted;
}

bool ReplayStore::has_blob(uint64_t key) const {
  std::lock_guard lock(mu_);
  return blobs_.count(key) != 0;
}

std::vector<uint8_t> ReplayStore::blob_copy(uint64_t key) const {
  std::lock_guard lock(mu_);
  auto it = blobs_.find(key);
  if (it == blobs_.end()) raise(ErrorCode::invalid_argument, "unknown blob key");
  return it->second.bytes;
}

uint32_t ReplayStore::push(const Transition& t, const std::vector<uint8_t>& obs,
                           const std::vector<uint8_t>& next_obs) {
  Transition keyed = t;
  keyed.obs_key = blob_key(obs.data(), obs.size());
  keyed.next_obs_key = blob_key(next_obs.data(), next_obs.size());
  put_blob(keyed.obs_key, obs.data(), obs.size());
  put_blob(keyed.next_obs_key, next_obs.data(), next_obs.size());
  return push_keyed(keyed);
}

uint32_t ReplayStore::push_keyed(const Transition& t) {
  if (std::isnan(t.priority)) raise(ErrorCode::invalid_argument, "NaN priority rejected");
  if (t.priority < 0.0) raise(ErrorCode::invalid_argument, "negative priority rejected");
  std::lock_guard lock(mu_);
  const size_t slot = write_cursor_;
  Slot& s = slots_[slot];
  // retain before releasing the evicted keys: the incoming transition may
  // reference the same content
  retain_blob(t.obs_key);
  retain_blob(t.next_obs_key);
  if (s.used) {
    release_blob(s.t.obs_key);
    release_blob(s.t.next_obs_key);
    s.version += 1;
    stats_.overwrites += 1;
  }
  s.t = t;
  s.used = true;
  tree_.set(slot, std::pow(t.priority, config_.omega));
  write_cursor_ = (write_cursor_ + 1) % config_.capacity;
  stats_.insertions += 1;
  stats_.size = std::min<uint64_t>(stats_.insertions, config_.capacity);
  stats_.blobs = blobs_.size();
  return static_cast<uint32_t>(slot);
}

SampleBatch ReplayStore::sample(int batch, double beta) {
  if (batch < 1) raise(ErrorCode::invalid_argument, "batch must be >= 1");
  std::lock_guard lock(mu_);
  const size_t n = stats_.size;
  if (n == 0) raise(ErrorCode::contract, "sample from an empty replay store");
  const double total = tree_.total();
  if (!(total > 0.0)) raise(ErrorCode::contract, "sample with zero total priority mass");

  SampleBatch out;
  out.transitions.reserve(batch);
  const double segment = total / batch;
  double max_w = 0.0;
  for (int i = 0; i < batch; ++i) {
    double mass = (i + rng_.uniform()) * segment;
    mass = std::min(mass, total * (1.0 - 1e-15));  // guard the upper edge
    size_t slot = tree_.find_prefix(mass);
    // the prefix search cannot land outside used slots while total > 0,
    // but clamp against the ring size anyway
    slot = std::min(slot, n - 1);
    const Slot& s = slots_[slot];
    const double p = tree_.leaf(slot) / total;
    const double w = std::pow(static_cast<double>(n) * std::max(p, 1e-300), -beta);
    max_w = std::max(max_w, w);
    out.transitions.push_back(s.t);
    out.slots.push_back(static_cast<uint32_t>(slot));
    out.versions.push_back(s.version);
    out.is_weights.push_back(w);
    out.obs.push_back(blobs_.at(s.t.obs_key).bytes);
    out.next_obs.push_back(blobs_.at(s.t.next_obs_key).bytes);
  }
  for (double& w : out.is_weights) w /= max_w;
  stats_.samples_served += batch;
  return out;
}

size_t ReplayStore::update_priorities(const std::vector<uint32_t>& slots,
                                      const std::vector<uint32_t>& versions,
                                      const std::vector<double>& priorities) {
  if (slots.size() != priorities.size() || slots.size() != versions.size())
    raise(ErrorCode::invalid_argument, "update arrays must have equal length");
  std::lock_guard lock(mu_);
  size_t applied = 0;
  for (size_t i = 0; i < slots.size(); ++i) {
    if (std::isnan(priorities[i])) raise(ErrorCode::invalid_argument, "NaN priority rejected");
    if (priorities[i] < 0.0) raise(ErrorCode::invalid_argument, "negative priority rejected");
    if (slots[i] >= slots_.size()) raise(ErrorCode::invalid_argument, "slot index out of range");
    Slot& s = slots_[slots[i]];
    if (!s.used || s.version != versions[i]) {
      stats_.stale_updates += 1;  // overwritten since it was sampled
      continue;
    }
    s.t.priority = priorities[i];
    tree_.set(slots[i], std::pow(priorities[i], config_.omega));
    ++applied;
  }
  return applied;
}

size_t ReplayStore::size() const {
  std::lock_guard lock(mu_);
  return stats_.size;
}

ReplayStats ReplayStore::stats() const {
  std::lock_guard lock(mu_);
  ReplayStats s = stats_;
  s.blobs = blobs_.size();
  return s;
}

std::vector<double> ReplayStore::leaf_weights() const {
  std::lock_guard lock(mu_);
  std::vector<double> out;
  for (size_t i = 0; i < stats_.size; ++i) out.push_back(tree_.leaf(i));
  return out;
}

std::vector<Transition> n_step_assemble(const std::vector<EpisodeStep>& steps, int n, double gamma,
                                        bool terminal) {
  if (n < 1) raise(ErrorCode::invalid_argument, "n must be >= 1");
  const size_t total = steps.size();
  std::vector<Transition> out;
  for (size_t t = 0; t < total; ++t) {
    const size_t available = total - t;
    if (!terminal && available < static_cast<size_t>(n)) break;  // window still open
    const size_t m = std::min<size_t>(n, available);
    double ret = 0.0;
    double g = 1.0;
    for (size_t k = 0; k < m; ++k) {
      ret += g * steps[t + k].clipped_reward;
      g *= gamma;
    }
    Transition tr;
    tr.obs_key = steps[t].obs_key;
    tr.action = steps[t].action;
    tr.n_step_return = ret;
    const bool terminal_within = terminal && t + static_cast<size_t>(n) >= total;
    tr.discount_pow_n = terminal_within ? 0.0 : std::pow(gamma, n);
    tr.next_obs_key = steps[t + m - 1].next_obs_key;
    out.push_back(tr);
  }
  return out;
}

NStepAssembler::NStepAssembler(int n, double gamma) : n_(n), gamma_(gamma) {
  if (n < 1) raise(ErrorCode::invalid_argument, "n must be >= 1");
}

std::optional<Transition> NStepAssembler::push(const EpisodeStep& step) {
  window_.push_back(step);
  // a window may only close once a further step proves its next state was
  // not terminal, hence n+1 pending steps
  if (window_.size() <= static_cast<size_t>(n_)) return std::nullopt;
  double ret = 0.0;
  double g = 1.0;
  for (int k = 0; k < n_; ++k) {
    ret += g * window_[k].clipped_reward;
    g *= gamma_;
  }
  Transition tr;
  tr.obs_key = window_.front().obs_key;
  tr.action = window_.front().action;
  tr.n_step_return = ret;
  tr.discount_pow_n = std::pow(gamma_, n_);
  tr.next_obs_key = window_[n_ - 1].next_obs_key;
  window_.erase(window_.begin());
  return tr;
}

std::vector<Transition> NStepAssembler::flush() {
  std::vector<Transition> out;
  while (!window_.empty()) {
    const size_t m = std::min<size_t>(n_, window_.size());
    double ret = 0.0;
    double g = 1.0;
    for (size_t k = 0; k < m; ++k) {
      ret += g * window_[k].clipped_reward;
      g *= gamma_;
    }
    Transition tr;
    tr.obs_key = window_.front().obs_key;
    tr.action = window_.front().action;
    tr.n_step_return = ret;
    tr.discount_pow_n = 0.0;  // the terminal falls inside every tail window
    tr.next_obs_key = window_[m - 1].next_obs_key;
    out.push_back(tr);
    window_.erase(window_.begin());
  }
  return out;
}

void NStepAssembler::clear() { window_.clear(); }

}  // namespace saber
