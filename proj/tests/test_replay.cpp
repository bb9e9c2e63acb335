#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "core/error.hpp"
#include "core/replay.hpp"
#include "core/rng.hpp"

using namespace saber;

namespace {

Transition make_t(double priority, int action = 0) {
  Transition t;
  t.action = action;
  t.priority = priority;
  return t;
}

std::vector<uint8_t> blob_of(int tag) {
  std::vector<uint8_t> b(16);
  for (size_t i = 0; i < b.size(); ++i) b[i] = static_cast<uint8_t>(tag + 3 * i);
  return b;
}

// Exact sampling distribution by enumerating inverse-CDF boundaries: leaf i
// receives mass [prefix_i, prefix_i + w_i), so its probability is w_i / total.
std::vector<double> brute_distribution(const std::vector<double>& leaf_weights) {
  double total = 0.0;
  for (double w : leaf_weights) total += w;
  std::vector<double> probs;
  for (double w : leaf_weights) probs.push_back(w / total);
  return probs;
}

}  // namespace

TEST_CASE("sum tree maintains parent sums and prefix search") {
  SumTree tree(8);
  std::vector<double> weights = {1, 3, 0, 2, 5, 0.5, 0, 1.5};
  for (size_t i = 0; i < weights.size(); ++i) tree.set(i, weights[i]);
  CHECK(tree.total() == doctest::Approx(13.0));

  // prefix boundaries map exactly onto leaves
  CHECK(tree.find_prefix(0.0) == 0);
  CHECK(tree.find_prefix(0.999) == 0);
  CHECK(tree.find_prefix(1.0) == 1);
  CHECK(tree.find_prefix(3.999) == 1);
  CHECK(tree.find_prefix(4.0) == 3);  // leaf 2 has zero width
  CHECK(tree.find_prefix(5.999) == 3);
  CHECK(tree.find_prefix(6.0) == 4);
  CHECK(tree.find_prefix(10.999) == 4);
  CHECK(tree.find_prefix(11.0) == 5);
  CHECK(tree.find_prefix(11.49) == 5);
  CHECK(tree.find_prefix(11.5) == 7);  // leaf 6 has zero width
  CHECK(tree.find_prefix(12.99) == 7);
}

TEST_CASE("push fills slots and wraps the ring") {
  ReplayConfig cfg;
  cfg.capacity = 4;
  cfg.omega = 1.0;
  ReplayStore store(cfg);
  CHECK(store.push(make_t(0.5), blob_of(0), blob_of(1)) == 0);
  CHECK(store.leaf_weights()[0] == doctest::Approx(0.5));
  CHECK(store.push(make_t(1.0), blob_of(1), blob_of(2)) == 1);
  CHECK(store.push(make_t(1.5), blob_of(2), blob_of(3)) == 2);
  CHECK(store.push(make_t(2.0), blob_of(3), blob_of(4)) == 3);
  // 5th push overwrites slot 0
  CHECK(store.push(make_t(9.0), blob_of(4), blob_of(5)) == 0);
  CHECK(store.size() == 4);
  auto st = store.stats();
  CHECK(st.insertions == 5);
  CHECK(st.overwrites == 1);

  CHECK_THROWS_AS(store.push(make_t(std::nan("")), blob_of(0), blob_of(1)), Error);
  CHECK_THROWS_AS(store.push(make_t(-1.0), blob_of(0), blob_of(1)), Error);
}

TEST_CASE("observation blobs are deduplicated by content hash") {
  ReplayConfig cfg;
  cfg.capacity = 8;
  ReplayStore store(cfg);
  // consecutive transitions share next_obs/obs content
  store.push(make_t(1.0), blob_of(0), blob_of(1));
  store.push(make_t(1.0), blob_of(1), blob_of(2));
  store.push(make_t(1.0), blob_of(2), blob_of(3));
  CHECK(store.stats().blobs == 4);  // not 6

  auto key = blob_key(blob_of(1).data(), blob_of(1).size());
  CHECK(store.has_blob(key));
  CHECK(store.blob_copy(key) == blob_of(1));
}

TEST_CASE("ring eviction releases unreferenced blobs") {
  ReplayConfig cfg;
  cfg.capacity = 2;
  ReplayStore store(cfg);
  for (int i = 0; i < 20; ++i) store.push(make_t(1.0), blob_of(i), blob_of(i + 1));
  // only the two live transitions' blobs remain (sharing one boundary)
  CHECK(store.stats().blobs == 3);
}

TEST_CASE("sampling probabilities {1,3} at omega=1 are {0.25, 0.75}") {
  ReplayConfig cfg;
  cfg.capacity = 2;
  cfg.omega = 1.0;
  ReplayStore store(cfg, 7);
  store.push(make_t(1.0, 0), blob_of(0), blob_of(1));
  store.push(make_t(3.0, 1), blob_of(1), blob_of(2));

  auto probs = brute_distribution(store.leaf_weights());
  CHECK(probs[0] == doctest::Approx(0.25));
  CHECK(probs[1] == doctest::Approx(0.75));

  // empirical check
  int counts[2] = {0, 0};
  const int draws = 100'000;
  for (int i = 0; i < draws / 2; ++i) {
    auto batch = store.sample(2, 0.4);
    for (auto a : batch.transitions) counts[a.action]++;
  }
  CHECK(static_cast<double>(counts[1]) / draws == doctest::Approx(0.75).epsilon(0.02));
}

TEST_CASE("omega=0 samples uniformly regardless of priorities") {
  ReplayConfig cfg;
  cfg.capacity = 4;
  cfg.omega = 0.0;
  ReplayStore store(cfg, 3);
  for (int i = 0; i < 4; ++i) store.push(make_t(std::pow(10.0, i), i), blob_of(i), blob_of(i + 1));
  auto weights = store.leaf_weights();
  for (double w : weights) CHECK(w == doctest::Approx(1.0));  // p^0 = 1

  // uniform priorities at any beta give all-ones IS weights
  auto batch = store.sample(16, 0.7);
  for (double w : batch.is_weights) CHECK(w == doctest::Approx(1.0));
}

TEST_CASE("priority zero is storable but never sampled while positive mass exists") {
  ReplayConfig cfg;
  cfg.capacity = 4;
  cfg.omega = 0.6;
  ReplayStore store(cfg, 5);
  store.push(make_t(0.0, 0), blob_of(0), blob_of(1));
  store.push(make_t(2.0, 1), blob_of(1), blob_of(2));
  store.push(make_t(0.0, 2), blob_of(2), blob_of(3));
  store.push(make_t(1.0, 3), blob_of(3), blob_of(4));
  for (int i = 0; i < 200; ++i) {
    auto batch = store.sample(4, 0.4);
    for (auto& t : batch.transitions) {
      CHECK(t.action != 0);
      CHECK(t.action != 2);
    }
  }
}

TEST_CASE("is_weights lie in (0,1] with the batch max exactly 1") {
  ReplayConfig cfg;
  cfg.capacity = 64;
  cfg.omega = 0.8;
  ReplayStore store(cfg, 11);
  Rng rng(2);
  for (int i = 0; i < 64; ++i)
    store.push(make_t(rng.uniform() * 5 + 0.01), blob_of(i), blob_of(i + 1));
  for (int trial = 0; trial < 50; ++trial) {
    auto batch = store.sample(16, 0.3 + 0.7 * rng.uniform());
    double max_w = 0.0;
    for (double w : batch.is_weights) {
      CHECK(w > 0.0);
      CHECK(w <= 1.0 + 1e-12);
      max_w = std::max(max_w, w);
    }
    CHECK(max_w == doctest::Approx(1.0));
  }
}

TEST_CASE("update_priorities rewrites leaves; root equals the flat-sum oracle") {
  ReplayConfig cfg;
  cfg.capacity = 8;
  cfg.omega = 0.5;
  ReplayStore store(cfg, 1);
  for (int i = 0; i < 8; ++i) store.push(make_t(1.0 + i), blob_of(i), blob_of(i + 1));

  std::vector<uint32_t> all_slots = {0, 1, 2, 3, 4, 5, 6, 7};
  std::vector<uint32_t> versions(8, 0);  // fresh slots
  size_t applied = store.update_priorities(all_slots, versions, std::vector<double>(8, 2.0));
  CHECK(applied == 8);

  // all equal priorities -> uniform leaves again
  auto weights = store.leaf_weights();
  for (double w : weights) CHECK(w == doctest::Approx(std::pow(2.0, 0.5)));

  CHECK_THROWS_AS(store.update_priorities({0}, {0}, {-1.0}), Error);
  CHECK_THROWS_AS(store.update_priorities({0, 1}, {0}, {1.0}), Error);
}

TEST_CASE("stale slots are skipped with a counter") {
  ReplayConfig cfg;
  cfg.capacity = 2;
  ReplayStore store(cfg, 1);
  store.push(make_t(1.0), blob_of(0), blob_of(1));
  store.push(make_t(1.0), blob_of(1), blob_of(2));
  auto batch = store.sample(2, 0.4);

  // overwrite both slots: the sampled versions go stale
  store.push(make_t(1.0), blob_of(2), blob_of(3));
  store.push(make_t(1.0), blob_of(3), blob_of(4));

  size_t applied = store.update_priorities(batch.slots, batch.versions,
                                           std::vector<double>(batch.slots.size(), 5.0));
  CHECK(applied == 0);
  CHECK(store.stats().stale_updates == batch.slots.size());
}

TEST_CASE("fuzz: root stays within 1e-9 relative of a flat-array oracle") {
  ReplayConfig cfg;
  cfg.capacity = 64;
  cfg.omega = 0.37;
  ReplayStore store(cfg, 17);
  Rng rng(99);
  std::map<uint32_t, double> flat;  // slot -> priority^omega

  for (int i = 0; i < 8; ++i) {
    double p = rng.uniform() * 10;
    uint32_t slot = store.push(make_t(p), blob_of(i), blob_of(i + 1));
    flat[slot] = std::pow(p, cfg.omega);
  }

  for (int op = 0; op < 10'000; ++op) {
    if (rng.bernoulli(0.6)) {
      double p = rng.uniform() * 10;
      uint32_t slot = store.push(make_t(p), blob_of(op % 97), blob_of((op + 1) % 97));
      flat[slot] = std::pow(p, cfg.omega);
    } else {
      auto batch = store.sample(4, 0.4);
      std::vector<double> new_p;
      for (size_t i = 0; i < batch.slots.size(); ++i) new_p.push_back(rng.uniform() * 10);
      size_t applied = store.update_priorities(batch.slots, batch.versions, new_p);
      CHECK(applied == batch.slots.size());  // single-threaded: nothing went stale
      for (size_t i = 0; i < batch.slots.size(); ++i)
        flat[batch.slots[i]] = std::pow(new_p[i], cfg.omega);
    }
    if (op % 500 == 0) {
      double expect = 0.0;
      for (auto& [slot, w] : flat) expect += w;
      double actual = 0.0;
      for (double w : store.leaf_weights()) actual += w;
      CHECK(actual == doctest::Approx(expect).epsilon(1e-9));
    }
  }
  double expect = 0.0;
  for (auto& [slot, w] : flat) expect += w;
  double root = 0.0;
  for (double w : store.leaf_weights()) root += w;
  CHECK(root == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("chi-square: sampling matches the brute-force distribution") {
  ReplayConfig cfg;
  cfg.capacity = 64;
  cfg.omega = 1.0;
  ReplayStore store(cfg, 23);
  Rng rng(5);
  for (int i = 0; i < 64; ++i) {
    double p = 0.05 + rng.uniform() * 4.0;
    store.push(make_t(p, i % 18), blob_of(i), blob_of(i + 1));
  }
  auto probs = brute_distribution(store.leaf_weights());

  const int draws = 100'000;
  std::vector<int> counts(64, 0);
  for (int i = 0; i < draws / 10; ++i) {
    auto batch = store.sample(10, 0.4);
    for (uint32_t s : batch.slots) counts[s]++;
  }
  double chi2 = 0.0;
  for (int i = 0; i < 64; ++i) {
    double expected = probs[i] * draws;
    chi2 += (counts[i] - expected) * (counts[i] - expected) / expected;
  }
  // 63 degrees of freedom: p > 0.001 requires chi2 below ~103.4
  CHECK(chi2 < 103.4);
}

TEST_CASE("empty store raises on sample") {
  ReplayConfig cfg;
  cfg.capacity = 4;
  ReplayStore store(cfg);
  CHECK_THROWS_AS(store.sample(1, 0.4), Error);
}

TEST_CASE("n-step assembly hand cases") {
  auto steps = [](std::vector<double> rewards) {
    std::vector<EpisodeStep> out;
    for (size_t i = 0; i < rewards.size(); ++i) {
      EpisodeStep s;
      s.obs_key = 100 + i;
      s.next_obs_key = 101 + i;
      s.action = static_cast<int>(i);
      s.clipped_reward = rewards[i];
      out.push_back(s);
    }
    return out;
  };

  // open stream: full window, bootstrap discount
  auto open = n_step_assemble(steps({1, 0, 1}), 3, 0.5, /*terminal=*/false);
  REQUIRE(open.size() == 1);
  CHECK(open[0].n_step_return == doctest::Approx(1.25));
  CHECK(open[0].discount_pow_n == doctest::Approx(0.125));
  CHECK(open[0].obs_key == 100);
  CHECK(open[0].next_obs_key == 103);

  // n = 1 reduces to the instantaneous reward
  auto one = n_step_assemble(steps({0.7, -0.2}), 1, 0.9, false);
  REQUIRE(one.size() == 2);
  CHECK(one[0].n_step_return == doctest::Approx(0.7));
  CHECK(one[1].n_step_return == doctest::Approx(-0.2));

  // terminal after 2 of 3 steps
  auto term = n_step_assemble(steps({1, 2}), 3, 0.9, true);
  REQUIRE(term.size() == 2);
  CHECK(term[0].n_step_return == doctest::Approx(2.8));
  CHECK(term[0].discount_pow_n == 0.0);
  CHECK(term[1].n_step_return == doctest::Approx(2.0));
  CHECK(term[1].discount_pow_n == 0.0);
}

TEST_CASE("n-step assembly equals brute-force recomputation on random episodes") {
  Rng rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const int len = 1 + static_cast<int>(rng.below(100));
    const int n = 1 + static_cast<int>(rng.below(6));
    const double gamma = 0.5 + 0.5 * rng.uniform();
    std::vector<EpisodeStep> steps;
    for (int i = 0; i < len; ++i) {
      EpisodeStep s;
      s.obs_key = 1000 + i;
      s.next_obs_key = 1001 + i;
      s.action = static_cast<int>(rng.below(18));
      s.clipped_reward = std::round((rng.uniform() * 2 - 1) * 100) / 100;
      steps.push_back(s);
    }
    auto got = n_step_assemble(steps, n, gamma, true);
    REQUIRE(got.size() == steps.size());
    for (int t = 0; t < len; ++t) {
      double expect = 0.0;
      for (int k = 0; k < n && t + k < len; ++k)
        expect += std::pow(gamma, k) * steps[t + k].clipped_reward;
      CHECK(got[t].n_step_return == doctest::Approx(expect).epsilon(1e-12));
      const double expect_disc = t + n < len ? std::pow(gamma, n) : 0.0;
      CHECK(got[t].discount_pow_n == doctest::Approx(expect_disc));
    }
  }
}

TEST_CASE("streaming assembler matches the pure per-episode function") {
  Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const int len = 1 + static_cast<int>(rng.below(40));
    const int n = 1 + static_cast<int>(rng.below(5));
    std::vector<EpisodeStep> steps;
    for (int i = 0; i < len; ++i) {
      EpisodeStep s;
      s.obs_key = 10 + i;
      s.next_obs_key = 11 + i;
      s.action = static_cast<int>(rng.below(18));
      s.clipped_reward = rng.uniform() * 2 - 1;
      steps.push_back(s);
    }
    auto pure = n_step_assemble(steps, n, 0.9, true);

    NStepAssembler assembler(n, 0.9);
    std::vector<Transition> streamed;
    for (const auto& s : steps) {
      auto t = assembler.push(s);
      if (t) streamed.push_back(*t);
    }
    for (auto& t : assembler.flush()) streamed.push_back(t);

    REQUIRE(streamed.size() == pure.size());
    for (size_t i = 0; i < pure.size(); ++i) {
      CHECK(streamed[i].obs_key == pure[i].obs_key);
      CHECK(streamed[i].next_obs_key == pure[i].next_obs_key);
      CHECK(streamed[i].n_step_return == doctest::Approx(pure[i].n_step_return).epsilon(1e-12));
      CHECK(streamed[i].discount_pow_n == doctest::Approx(pure[i].discount_pow_n));
    }
  }
}

TEST_CASE("beta schedule is linear from start to end") {
  ReplayConfig cfg;
  CHECK(cfg.beta_at(0.0) == doctest::Approx(0.4));
  CHECK(cfg.beta_at(0.5) == doctest::Approx(0.7));
  CHECK(cfg.beta_at(1.0) == doctest::Approx(1.0));
  CHECK(cfg.beta_at(2.0) == doctest::Approx(1.0));  // clamped
}
