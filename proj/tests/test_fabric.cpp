#include <doctest.h>

#include <atomic>
#include <cmath>
#include <thread>

#include "core/error.hpp"
#include "core/fabric.hpp"
#include "core/replay_service.hpp"
#include "core/rng.hpp"
#include "core/trainer.hpp"

using namespace saber;

namespace {

ReplayConfig small_replay() {
  ReplayConfig cfg;
  cfg.capacity = 1 << 12;
  return cfg;
}

OutTransition fake_transition(Rng& rng, int tag) {
  OutTransition o;
  o.obs.resize(32);
  o.next_obs.resize(32);
  for (auto& b : o.obs) b = static_cast<uint8_t>(rng.below(256));
  for (auto& b : o.next_obs) b = static_cast<uint8_t>(rng.below(256));
  o.t.obs_key = blob_key(o.obs.data(), o.obs.size());
  o.t.next_obs_key = blob_key(o.next_obs.data(), o.next_obs.size());
  o.t.action = tag % 18;
  o.t.n_step_return = rng.uniform();
  o.t.discount_pow_n = 0.97;
  o.t.priority = 0.5 + rng.uniform();
  return o;
}

}  // namespace

TEST_CASE("replay service: put then stats") {
  ReplayService service("127.0.0.1:0", small_replay(), 1);
  service.start();
  ReplayClient client(service.address());

  Rng rng(3);
  std::vector<OutTransition> batch;
  for (int i = 0; i < 32; ++i) batch.push_back(fake_transition(rng, i));
  CHECK(client.put(batch) == 32);

  auto stats = client.stats();
  CHECK(stats.size == 32);
  CHECK(stats.insertions == 32);
  CHECK(stats.capacity == small_replay().capacity);
  service.stop();
}

TEST_CASE("replay service: sampling before any put returns an error reply") {
  ReplayService service("127.0.0.1:0", small_replay(), 1);
  service.start();
  ReplayClient client(service.address());
  CHECK_THROWS_AS(client.sample(4, 0.4), Error);
  // connection still works afterwards
  auto stats = client.stats();
  CHECK(stats.size == 0);
  service.stop();
}

TEST_CASE("replay service: sample returns transitions with their blobs") {
  ReplayService service("127.0.0.1:0", small_replay(), 1);
  service.start();
  ReplayClient client(service.address());
  Rng rng(9);
  std::vector<OutTransition> batch;
  for (int i = 0; i < 64; ++i) batch.push_back(fake_transition(rng, i));
  client.put(batch);

  auto got = client.sample(16, 0.4);
  CHECK(got.transitions.size() == 16);
  CHECK(got.slots.size() == 16);
  CHECK(got.is_weights.size() == 16);
  for (const auto& t : got.transitions) {
    bool obs_found = false, next_found = false;
    for (const auto& b : got.blobs) {
      obs_found = obs_found || b.key == t.obs_key;
      next_found = next_found || b.key == t.next_obs_key;
    }
    CHECK(obs_found);
    CHECK(next_found);
  }

  // priority updates round-trip
  std::vector<double> fresh(got.slots.size(), 1.0);
  CHECK(client.update_priorities(got.slots, got.versions, fresh) == got.slots.size());
  service.stop();
}

TEST_CASE("two concurrent writers lose nothing") {
  ReplayService service("127.0.0.1:0", small_replay(), 1);
  service.start();
  const std::string address = service.address();

  auto writer = [&](uint64_t seed) {
    ReplayClient client(address);
    Rng rng(seed);
    uint64_t acked = 0;
    for (int b = 0; b < 100; ++b) {
      std::vector<OutTransition> batch;
      for (int i = 0; i < 50; ++i) batch.push_back(fake_transition(rng, i));
      acked += client.put(batch);
    }
    return acked;
  };
  uint64_t acked1 = 0, acked2 = 0;
  std::thread t1([&] { acked1 = writer(11); });
  std::thread t2([&] { acked2 = writer(22); });
  t1.join();
  t2.join();

  CHECK(acked1 + acked2 == 10'000);
  auto stats = service.stats();
  CHECK(stats.insertions == 10'000);
  CHECK(stats.size == std::min<uint64_t>(10'000, small_replay().capacity));
  CHECK(stats.size == stats.insertions - stats.overwrites);
  service.stop();
}

TEST_CASE("malformed frame closes the connection but not the service") {
  ReplayService service("127.0.0.1:0", small_replay(), 1);
  service.start();

  {
    TcpStream raw = TcpStream::connect(service.address());
    std::vector<uint8_t> garbage = {9, 0, 0, 0, 250, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    raw.send_all(garbage.data(), garbage.size());
    // the server drops the connection: clean EOF or a reset, never a reply
    bool closed = false;
    try {
      std::vector<uint8_t> frame;
      closed = !raw.recv_frame(frame);
    } catch (const Error&) {
      closed = true;
    }
    CHECK(closed);
  }

  ReplayClient healthy(service.address());
  CHECK(healthy.stats().size == 0);
  service.stop();
}

TEST_CASE("lockstep gate keeps the 4:1 invariant under concurrency") {
  LockstepGate gate(4);
  const long kEnvSteps = 4000;
  std::atomic<bool> violated{false};

  std::thread learner([&] {
    while (gate.learner_tick()) {
      const long l = gate.learner_steps();
      const long e = gate.env_steps();
      if (l > e / 4 + 1) violated = true;
    }
  });
  std::thread actor([&] {
    for (long i = 0; i < kEnvSteps; ++i) gate.actor_tick();
    gate.set_actor_done();
  });
  actor.join();
  learner.join();

  CHECK_FALSE(violated.load());
  CHECK(gate.env_steps() == kEnvSteps);
  CHECK(std::abs(gate.learner_steps() - kEnvSteps / 4) <= 1);
  CHECK(gate.learner_steps() == 1000);
}

TEST_CASE("disabled gate leaves the learner unconstrained") {
  LockstepGate gate(4, /*enabled=*/false);
  for (int i = 0; i < 10; ++i) gate.actor_tick();
  for (int i = 0; i < 500; ++i) CHECK(gate.learner_tick());
  CHECK(gate.learner_steps() == 500);
}

TEST_CASE("param server publishes monotone versions") {
  ParamServer server("127.0.0.1:0");
  server.start();

  ParamClient client(server.address());
  CHECK_THROWS_AS(client.fetch(), Error);  // nothing published yet

  server.publish(0, {1, 2, 3});
  ParamClient client2(server.address());
  auto r0 = client2.fetch();
  CHECK(r0.version == 0);
  CHECK(r0.blob == std::vector<uint8_t>{1, 2, 3});

  server.publish(3, {9});
  auto r3 = client2.fetch();
  CHECK(r3.version == 3);
  CHECK(r3.blob == std::vector<uint8_t>{9});

  CHECK_THROWS_AS(server.publish(2, {0}), Error);  // versions never go back
  server.stop();
}

TEST_CASE("actor stepper emits one transition per env step across an episode") {
  auto game = make_chain_game({});
  SaberConfig env;
  env.sticky_xi = 0.0;
  env.max_stuck_frames = 18'000;
  env.max_episode_frames = 216'000;
  LossConfig loss;
  loss.n_tau = 2;
  loss.n_tau_prime = 2;
  loss.k_action = 2;
  ActorStepper stepper(*game, env, loss, 3, 0.99, 8, 7);

  ArchSpec arch = ArchSpec::flat_toy(stepper.feature_dim());
  QuantileNetwork<float> net(arch);
  Rng rng(1);
  auto params = net.init_params(rng);

  long emitted = 0;
  bool saw_episode_end = false;
  while (!saw_episode_end) {
    auto out = stepper.step(net, params);
    emitted += static_cast<long>(out.transitions.size());
    for (const auto& o : out.transitions) {
      CHECK(o.t.priority > 0.0);
      CHECK(o.obs.size() == o.next_obs.size());
      CHECK(o.obs.size() == static_cast<size_t>(stepper.feature_dim()) * sizeof(float));
    }
    saw_episode_end = out.episode_end;
  }
  // an episode of N env steps yields exactly N transitions after the flush
  CHECK(emitted == stepper.env_steps());
  CHECK(stepper.episodes() == 1);
  CHECK(stepper.episode_scores().size() == 1);
}

TEST_CASE("loopback fabric: learner trains from two actors with zero loss") {
  ReplayConfig replay_cfg;
  replay_cfg.capacity = 1 << 13;
  ReplayService service("127.0.0.1:0", replay_cfg, 5);
  service.start();

  LearnerRunConfig lcfg;
  lcfg.replay_address = service.address();
  lcfg.arch = ArchSpec::flat_toy(4 * 8 * 8);
  lcfg.loss.n_tau = 2;
  lcfg.loss.n_tau_prime = 2;
  lcfg.loss.k_action = 2;
  lcfg.batch_size = 8;
  lcfg.min_fill = 64;
  lcfg.total_steps = 50;
  lcfg.publish_interval = 10;
  lcfg.target_sync_interval = 20;
  lcfg.seed = 9;
  LearnerNode learner(lcfg);

  ActorRunConfig acfg;
  acfg.game_id = "toy:chain";
  acfg.replay_address = service.address();
  acfg.learner_address = learner.param_address();
  acfg.env.sticky_xi = 0.25;
  acfg.env.max_stuck_frames = 18'000;
  acfg.env.max_episode_frames = 216'000;
  acfg.loss = lcfg.loss;
  acfg.feature_edge = 8;
  acfg.env_step_budget = 2'000;  // safety cap; the transition budget binds
  acfg.transition_budget = 500;
  acfg.put_batch_size = 16;
  acfg.param_refresh_interval = 100;

  ActorRunResult r1, r2;
  LearnerRunResult lr;
  std::thread learner_thread([&] { lr = learner.run(); });
  std::thread a1([&] {
    ActorRunConfig c = acfg;
    c.seed = 1;
    c.env.seed = 1;
    r1 = actor_run(c);
  });
  std::thread a2([&] {
    ActorRunConfig c = acfg;
    c.seed = 2;
    c.env.seed = 2;
    r2 = actor_run(c);
  });
  a1.join();
  a2.join();
  learner_thread.join();

  CHECK(r1.transitions_sent == 500);
  CHECK(r2.transitions_sent == 500);
  CHECK(r1.transitions_sent == r1.acked);
  CHECK(r2.transitions_sent == r2.acked);

  auto stats = service.stats();
  CHECK(stats.insertions == r1.transitions_sent + r2.transitions_sent);
  CHECK(stats.insertions == 1000);
  CHECK(stats.size == stats.insertions - stats.overwrites);
  // published version is steps / publish_interval
  CHECK(lr.steps == 50);
  CHECK(lr.published_version == 5);
  service.stop();
}

TEST_CASE("actor-side priorities equal the learner's loss formula") {
  // with identical parameters (online == target), noise and quantile draws,
  // the pre-insertion loss and a learner-style recomputation agree exactly
  ArchSpec arch = ArchSpec::flat_toy(12, 8, 4);
  arch.n_cos = 6;
  QuantileNetwork<float> net(arch);
  Rng init(5);
  auto params = net.init_params(init);
  Rng noise_rng(9);
  auto noise_online = net.sample_noise(noise_rng);
  auto noise_target = net.sample_noise(noise_rng);
  LossConfig cfg;
  cfg.n_tau = 3;
  cfg.n_tau_prime = 4;
  cfg.k_action = 5;

  std::vector<float> obs(net.input_size()), next_obs(net.input_size());
  Rng data(2);
  for (auto& v : obs) v = static_cast<float>(data.uniform());
  for (auto& v : next_obs) v = static_cast<float>(data.uniform());

  // actor path
  Rng actor_rng(777);
  const double actor_loss = transition_loss<float>(net, obs, next_obs, 2, 0.8f, 0.9f, params,
                                                   noise_online, params, noise_target, cfg,
                                                   actor_rng);

  // learner path, spelled out the way the learner computes it
  Rng learner_rng(777);
  std::vector<float> q;
  {
    NetForward<float> ws;
    std::vector<float> taus;
    net.q_values_into(next_obs, params, noise_online, cfg.k_action, learner_rng, ws, taus, q);
  }
  int best = 0;
  for (size_t a = 1; a < q.size(); ++a)
    if (q[a] > q[best]) best = static_cast<int>(a);
  auto target_taus = sample_taus<float>(cfg.n_tau_prime, learner_rng);
  auto target_fwd = net.forward(next_obs, target_taus, params, noise_target);
  std::vector<float> y(cfg.n_tau_prime);
  for (int j = 0; j < cfg.n_tau_prime; ++j)
    y[j] = 0.8f + 0.9f * target_fwd.taus[j].theta[best];
  auto taus = sample_taus<float>(cfg.n_tau, learner_rng);
  auto fwd = net.forward(obs, taus, params, noise_online);
  std::vector<float> theta(cfg.n_tau);
  for (int k = 0; k < cfg.n_tau; ++k) theta[k] = fwd.taus[k].theta[2];
  auto qh = quantile_huber_loss<float>(theta, taus, y, 1.0f);

  CHECK(actor_loss == doctest::Approx(static_cast<double>(qh.loss)).epsilon(1e-12));
  CHECK(priority_of(actor_loss, cfg.priority_floor) ==
        doctest::Approx(priority_of(qh.loss, cfg.priority_floor)).epsilon(1e-12));
}

TEST_CASE("learner that never reaches min fill performs zero steps") {
  ReplayService service("127.0.0.1:0", small_replay(), 2);
  service.start();
  ReplayClient client(service.address());
  Rng rng(1);
  std::vector<OutTransition> batch;
  for (int i = 0; i < 999; ++i) batch.push_back(fake_transition(rng, i));
  client.put(batch);

  LearnerRunConfig cfg;
  cfg.replay_address = service.address();
  cfg.arch = ArchSpec::flat_toy(64);
  cfg.min_fill = 1000;
  cfg.total_steps = 10;
  cfg.min_fill_timeout_ms = 300;
  LearnerNode learner(cfg);
  auto result = learner.run();
  CHECK(result.timed_out_waiting_for_fill);
  CHECK(result.steps == 0);
  service.stop();
}

TEST_CASE("single-process lockstep trainer obeys the ratio and is deterministic") {
  TrainToyConfig cfg;
  cfg.apply_toy_defaults();
  cfg.env.sticky_xi = 0.25;
  cfg.env_step_budget = 1200;
  cfg.min_fill = 100;
  cfg.batch_size = 8;
  cfg.loss.n_tau = 2;
  cfg.loss.n_tau_prime = 2;
  cfg.loss.k_action = 2;
  cfg.replay.capacity = 2048;
  cfg.curve_interval = 400;
  cfg.curve_window = 4;
  cfg.seed = 77;

  auto r1 = train_toy(cfg);
  CHECK(r1.env_steps == 1200);
  CHECK(std::abs(r1.learner_steps - r1.env_steps / 4) <= 1);
  CHECK(r1.episodes > 0);

  auto r2 = train_toy(cfg);
  CHECK(r1.learner_steps == r2.learner_steps);
  CHECK(r1.episodes == r2.episodes);
  CHECK(r1.final_curve_score == r2.final_curve_score);
  REQUIRE(r1.curve.size() == r2.curve.size());
  for (size_t i = 0; i < r1.curve.size(); ++i) {
    CHECK(r1.curve[i].first == r2.curve[i].first);
    CHECK(r1.curve[i].second == r2.curve[i].second);
  }
}
