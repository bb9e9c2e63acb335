#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "saber/saber.h"

namespace {
const std::string kData = SABER_DATA_DIR;
}

TEST_CASE("version and error reporting") {
  CHECK(saber_version() != nullptr);
  saber_baselines* b = nullptr;
  int rc = saber_baselines_open("/nonexistent/file.csv", &b);
  CHECK(rc == SABER_ERR_IO);
  CHECK(std::strlen(saber_last_error()) > 0);
  CHECK(saber_baselines_open(nullptr, &b) == SABER_ERR_INVALID_ARGUMENT);
}

TEST_CASE("baseline handle lifecycle and lookups") {
  saber_baselines* b = nullptr;
  REQUIRE(saber_baselines_open((kData + "/baselines.csv").c_str(), &b) == SABER_OK);
  CHECK(saber_baselines_count(b) == 61);
  CHECK(saber_baselines_records_present(b) == 58);

  saber_game_baseline g;
  REQUIRE(saber_baselines_find(b, "breakout", &g) == SABER_OK);
  CHECK(g.random_score == doctest::Approx(1.5));
  CHECK(g.has_world_record);
  CHECK(g.world_record == doctest::Approx(864.0));
  CHECK_FALSE(g.extrapolated);

  REQUIRE(saber_baselines_find(b, "tennis", &g) == SABER_OK);
  CHECK_FALSE(g.has_world_record);

  CHECK(saber_baselines_find(b, "no such game", &g) == SABER_ERR_INVALID_ARGUMENT);

  double median = 0, mean = 0;
  size_t used = 0;
  REQUIRE(saber_beginner_baseline_stats(b, &median, &mean, &used) == SABER_OK);
  CHECK(used == 54);
  CHECK(median == doctest::Approx(44.0).epsilon(0.1));
  CHECK(mean == doctest::Approx(993.0).epsilon(0.1));
  saber_baselines_free(b);
}

TEST_CASE("normalization and classification through the C surface") {
  double v = 0;
  REQUIRE(saber_normalize_record(175.47, 1.5, 864.0, &v) == SABER_OK);
  CHECK(v == doctest::Approx(0.2017).epsilon(1e-3));
  CHECK(saber_normalize_record(1.0, 2.0, 2.0, &v) == SABER_ERR_VALIDATION);

  REQUIRE(saber_normalize_reference(10110.4, 136.15, 2764.55, &v) == SABER_OK);
  CHECK(v == doctest::Approx(3.7948).epsilon(1e-3));

  int cls = -1;
  saber_classify(0.2017, &cls);
  CHECK(cls == 2);
  CHECK(std::string(saber_score_class_name(cls)) == "medium");
  saber_classify(2.0, &cls);
  CHECK(cls == 4);
}

TEST_CASE("report building and aggregation") {
  saber_baselines* b = nullptr;
  saber_agent_table* t = nullptr;
  REQUIRE(saber_baselines_open((kData + "/baselines.csv").c_str(), &b) == SABER_OK);
  REQUIRE(saber_agent_table_open((kData + "/scores_200m_by_time.csv").c_str(), &t) == SABER_OK);
  CHECK(saber_agent_table_columns(t) == 6);

  saber_report* r = nullptr;
  REQUIRE(saber_report_build(b, t, "riqn_unlimited", SABER_TIME_UNLIMITED, 200000000, 2.0, &r) ==
          SABER_OK);
  CHECK(saber_report_median(r) == doctest::Approx(0.0313).epsilon(2e-2));
  CHECK(saber_report_superhuman(r) == 4);
  int hist[5];
  saber_report_histogram(r, hist);
  int total = 0;
  for (int c : hist) total += c;
  CHECK(total == 58);

  char* json = nullptr;
  REQUIRE(saber_report_to_json(r, &json) == SABER_OK);
  CHECK(std::string(json).find("superhuman") != std::string::npos);
  saber_string_free(json);

  saber_report_free(r);
  saber_agent_table_free(t);
  saber_baselines_free(b);

  // aggregate a plain value array
  double values[3] = {0.005, 0.20, INFINITY};
  saber_report* r2 = nullptr;
  REQUIRE(saber_report_from_values(values, 3, 2.0, &r2) == SABER_OK);
  CHECK(saber_report_median(r2) == doctest::Approx(0.20));
  CHECK(saber_report_mean(r2) == doctest::Approx(0.735));
  saber_report_free(r2);
}

TEST_CASE("verify-tables through the C surface") {
  char* text = nullptr;
  int all_pass = 0;
  REQUIRE(saber_verify_tables(kData.c_str(), 0, &text, &all_pass) == SABER_OK);
  CHECK(all_pass == 1);
  CHECK(std::string(text).find("ALL CHECKS PASSED") != std::string::npos);
  saber_string_free(text);

  CHECK(saber_verify_tables("/nonexistent", 0, &text, &all_pass) == SABER_ERR_IO);
}

TEST_CASE("environment round trip over the C surface") {
  saber_env_config cfg;
  saber_env_config_defaults(&cfg);
  CHECK(cfg.sticky_xi == doctest::Approx(0.25));
  CHECK(cfg.max_stuck_frames == 18000);
  CHECK(cfg.max_episode_frames == 21600000);
  cfg.sticky_xi = 0.0;
  cfg.max_stuck_frames = 300;
  cfg.max_episode_frames = 3000;

  saber_env* env = nullptr;
  REQUIRE(saber_env_create("toy:stuck", &cfg, &env) == SABER_OK);
  REQUIRE(saber_env_reset(env) == SABER_OK);
  saber_step_result step;
  do {
    REQUIRE(saber_env_step(env, 0, &step) == SABER_OK);
  } while (!step.done);
  CHECK(step.termination == SABER_TERM_STUCK_TIMEOUT);
  saber_episode_log log;
  REQUIRE(saber_env_log(env, &log) == SABER_OK);
  CHECK(log.frames == 300);
  CHECK(std::string(saber_termination_name(log.termination)) == "stuck_timeout");

  // stepping a finished episode is a contract error
  CHECK(saber_env_step(env, 0, &step) == SABER_ERR_CONTRACT);
  saber_env_free(env);

  CHECK(saber_env_create("toy:nope", &cfg, &env) == SABER_ERR_INVALID_ARGUMENT);

  char ids[256];
  REQUIRE(saber_game_ids(ids, sizeof(ids)) == SABER_OK);
  CHECK(std::string(ids).find("toy:chain") != std::string::npos);
}

TEST_CASE("run_episode with a C policy callback") {
  saber_env_config cfg;
  saber_env_config_defaults(&cfg);
  cfg.sticky_xi = 0.0;
  cfg.max_stuck_frames = 18000;
  cfg.max_episode_frames = 216000;

  saber_env* env = nullptr;
  REQUIRE(saber_env_create("toy:chain", &cfg, &env) == SABER_OK);
  saber_episode_log log;
  auto policy = [](const float*, int, int, void*) -> int { return 3; };  // RIGHT
  REQUIRE(saber_env_run_episode(env, policy, nullptr, &log) == SABER_OK);
  CHECK(log.raw_score == doctest::Approx(1000.0));
  CHECK(log.frames == 500);

  char* json = nullptr;
  REQUIRE(saber_episode_log_json(&log, &json) == SABER_OK);
  CHECK(std::string(json).find("game_over") != std::string::npos);
  saber_string_free(json);
  saber_env_free(env);
}

TEST_CASE("clip and preprocess helpers") {
  double clipped;
  int rollover;
  saber_clip_reward(-1000000.0, &clipped, &rollover);
  CHECK(rollover == 1);
  CHECK(clipped == 0.0);
  saber_clip_reward(5.0, &clipped, &rollover);
  CHECK(clipped == 1.0);

  std::vector<uint8_t> rgb(210 * 160 * 3, 128);
  std::vector<float> out(84 * 84);
  REQUIRE(saber_preprocess_frame(rgb.data(), 210, 160, out.data()) == SABER_OK);
  CHECK(out[0] == doctest::Approx(128.0));
}

TEST_CASE("replay store over the C surface") {
  saber_replay_config cfg;
  saber_replay_config_defaults(&cfg);
  CHECK(cfg.omega == doctest::Approx(0.2));
  cfg.capacity = 8;
  cfg.omega = 1.0;

  saber_replay* r = nullptr;
  REQUIRE(saber_replay_create(&cfg, &r) == SABER_OK);

  saber_batch* empty = nullptr;
  CHECK(saber_replay_sample(r, 2, 0.4, &empty) == SABER_ERR_CONTRACT);

  std::vector<uint8_t> obs(64, 1), next(64, 2);
  for (int i = 0; i < 8; ++i) {
    saber_transition t{};
    t.action = i;
    t.n_step_return = 0.5;
    t.discount_pow_n = 0.97;
    t.priority = 1.0 + i;
    obs[0] = static_cast<uint8_t>(i);
    next[0] = static_cast<uint8_t>(i + 1);
    uint32_t slot = 99;
    REQUIRE(saber_replay_push(r, &t, obs.data(), obs.size(), next.data(), next.size(), &slot) ==
            SABER_OK);
    CHECK(slot == static_cast<uint32_t>(i));
  }
  CHECK(saber_replay_size(r) == 8);

  saber_batch* batch = nullptr;
  REQUIRE(saber_replay_sample(r, 4, 0.4, &batch) == SABER_OK);
  CHECK(saber_batch_size(batch) == 4);
  double max_w = 0;
  std::vector<uint32_t> slots(4), versions(4);
  std::vector<double> fresh(4, 2.0);
  for (size_t i = 0; i < 4; ++i) {
    double w;
    REQUIRE(saber_batch_is_weight(batch, i, &w) == SABER_OK);
    max_w = std::max(max_w, w);
    REQUIRE(saber_batch_slot(batch, i, &slots[i], &versions[i]) == SABER_OK);
    const uint8_t* data;
    size_t len;
    REQUIRE(saber_batch_obs(batch, i, &data, &len) == SABER_OK);
    CHECK(len == 64);
  }
  CHECK(max_w == doctest::Approx(1.0));
  size_t applied = 0;
  REQUIRE(saber_replay_update_priorities(r, slots.data(), versions.data(), fresh.data(), 4,
                                         &applied) == SABER_OK);
  CHECK(applied == 4);
  saber_batch_free(batch);

  char* stats = nullptr;
  REQUIRE(saber_replay_stats_json(r, &stats) == SABER_OK);
  CHECK(std::string(stats).find("\"insertions\":8") != std::string::npos);
  saber_string_free(stats);
  saber_replay_free(r);
}

TEST_CASE("toy training, checkpoint policy and replay service over the C surface") {
  saber_train_options opts;
  saber_train_options_defaults(&opts);
  CHECK(opts.epsilon_start == doctest::Approx(1.0));
  opts.env_step_budget = 900;
  opts.min_fill = 100;
  opts.batch_size = 8;
  opts.n_tau = 2;
  opts.n_tau_prime = 2;
  opts.k_action = 2;
  opts.curve_window = 4;
  opts.curve_interval = 300;
  opts.seed = 5;
  std::string dir = "/tmp/saber_capi_train";
  opts.out_dir = dir.c_str();

  saber_train_result result;
  REQUIRE(saber_train_toy(&opts, &result) == SABER_OK);
  CHECK(result.env_steps == 900);
  CHECK(result.learner_steps > 0);
  CHECK(result.chain_optimal_return == doctest::Approx(1000.0));

  // final checkpoint is loadable and yields actions
  saber_net* net = nullptr;
  REQUIRE(saber_net_load((dir + "/checkpoint_900.bin").c_str(), &net) == SABER_OK);
  CHECK(saber_net_input_size(net) == 400);
  std::vector<float> observation(4 * 84 * 84, 10.0f);
  int action = -1;
  REQUIRE(saber_net_act(net, observation.data(), 4, &action) == SABER_OK);
  CHECK(action >= 0);
  CHECK(action < 18);
  saber_net_free(net);

  // replay service start/stats/stop
  saber_replay_config rcfg;
  saber_replay_config_defaults(&rcfg);
  saber_server* server = nullptr;
  REQUIRE(saber_serve_replay("127.0.0.1:0", &rcfg, &server) == SABER_OK);
  char address[64];
  REQUIRE(saber_server_address(server, address, sizeof(address)) == SABER_OK);
  CHECK(std::string(address).find("127.0.0.1:") == 0);
  char* stats = nullptr;
  REQUIRE(saber_server_stats_json(server, &stats) == SABER_OK);
  CHECK(std::string(stats).find("\"size\":0") != std::string::npos);
  saber_string_free(stats);
  saber_server_stop_free(server);
}
