// saber: score normalization, protocol-conformant evaluation, toy training
// and the distributed actor/learner/replay roles behind one binary.
//
// Exit codes: 0 ok, 1 verification/other failure, 2 missing data,
// 3 numerical abort.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "saber/saber.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitMissingData = 2;
constexpr int kExitNumeric = 3;

int exit_code_for(int rc) {
  switch (rc) {
    case SABER_OK: return kExitOk;
    case SABER_ERR_IO: return kExitMissingData;
    case SABER_ERR_NUMERIC: return kExitNumeric;
    default: return kExitFail;
  }
}

[[noreturn]] void die(int rc, const std::string& what) {
  std::cerr << "error: " << what << ": " << saber_last_error() << "\n";
  std::exit(exit_code_for(rc));
}

void check(int rc, const std::string& what) {
  if (rc != SABER_OK) die(rc, what);
}

std::string default_data_dir() {
  if (const char* env = std::getenv("SABER_DATA_DIR")) return env;
  return SABER_DEFAULT_DATA_DIR;
}

// flat `key = value` config files; command-line flags take precedence
std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::map<std::string, std::string> kv;
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot open config file " << path << "\n";
    std::exit(kExitMissingData);
  }
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      size_t b = s.find_first_not_of(" \t\r\n");
      if (b == std::string::npos) return std::string();
      size_t e = s.find_last_not_of(" \t\r\n");
      return s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!key.empty()) kv[key] = value;
  }
  return kv;
}

// every run leaves a config echo in its output directory
void write_config_echo(const std::string& out_dir,
                       const std::vector<std::pair<std::string, std::string>>& entries) {
  fs::create_directories(out_dir);
  std::ofstream out(out_dir + "/config.echo");
  for (const auto& [k, v] : entries) out << k << " = " << v << "\n";
  // wall-clock metadata stays in a comment block so payload lines are
  // deterministic for a fixed seed
  std::time_t now = std::time(nullptr);
  char buf[64];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  out << "# meta.wall_clock = " << buf << "\n";
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

void add_env_flags(CLI::App* cmd, saber_env_config& env) {
  cmd->add_option("--sticky-xi", env.sticky_xi, "Sticky-action repeat probability");
  cmd->add_option("--max-stuck-frames", env.max_stuck_frames,
                  "Frames without reward before stuck_timeout");
  cmd->add_option("--max-episode-frames", env.max_episode_frames, "Hard episode frame cap");
  cmd->add_option("--action-repeat", env.action_repeat, "Emulator frames per agent action");
  cmd->add_option("--frame-stack", env.frame_stack, "Stacked frames per observation");
}

std::vector<std::pair<std::string, std::string>> env_echo(const saber_env_config& env) {
  return {{"sticky_xi", fmt(env.sticky_xi)},
          {"action_set_size", std::to_string(env.action_set_size)},
          {"max_stuck_frames", std::to_string(env.max_stuck_frames)},
          {"max_episode_frames", std::to_string(env.max_episode_frames)},
          {"action_repeat", std::to_string(env.action_repeat)},
          {"frame_stack", std::to_string(env.frame_stack)},
          {"seed", std::to_string(env.seed)}};
}

std::atomic<bool> g_interrupted{false};
void handle_signal(int) { g_interrupted = true; }

// --- eval policies -----------------------------------------------------

struct NetPolicy {
  saber_net* net = nullptr;
  int frame_stack = 4;
};

int fixed_policy(const float*, int, int, void* user) {
  return *static_cast<int*>(user);
}

int random_policy(const float*, int, int, void* user) {
  auto* state = static_cast<uint64_t*>(user);
  *state = *state * 6364136223846793005ULL + 1442695040888963407ULL;
  return static_cast<int>((*state >> 33) % 18);
}

int net_policy(const float* obs, int stack, int, void* user) {
  auto* p = static_cast<NetPolicy*>(user);
  int action = 0;
  check(saber_net_act(p->net, obs, stack, &action), "policy network");
  return action;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SABER benchmark scoring, evaluation and Rainbow-IQN training"};
  app.require_subcommand(1);

  std::string data_dir = default_data_dir();
  app.add_option("--data-dir", data_dir, "Directory holding the CSV datasets")
      ->envname("SABER_DATA_DIR");

  // ---- verify-tables ----
  auto* cmd_verify = app.add_subcommand(
      "verify-tables", "Recompute the published statistics from the shipped datasets");
  bool verify_json = false;
  std::string verify_out = "saber-out/verify-tables";
  cmd_verify->add_flag("--json", verify_json, "Machine-readable diff");
  cmd_verify->add_option("--out-dir", verify_out, "Output directory");

  // ---- score ----
  auto* cmd_score = app.add_subcommand(
      "score", "Normalize shipped agent tables against the records baseline");
  std::string score_agent = "riqn";
  std::string score_time = "unlimited";
  std::string score_out = "saber-out/score";
  bool score_curve = true;
  cmd_score->add_option("--agent", score_agent, "rainbow | riqn")
      ->check(CLI::IsMember({"rainbow", "riqn"}));
  cmd_score->add_option("--time", score_time, "five_min | thirty_min | unlimited")
      ->check(CLI::IsMember({"five_min", "thirty_min", "unlimited"}));
  cmd_score->add_option("--out-dir", score_out, "Output directory");
  cmd_score->add_flag("--curve,!--no-curve", score_curve,
                      "Also emit the checkpoint median curve (riqn tables)");

  // ---- report ----
  auto* cmd_report = app.add_subcommand(
      "report", "Aggregate an episodes.jsonl file into a normalized report for one game");
  std::string report_episodes, report_game, report_out = "saber-out/report";
  double report_random = 0.0, report_record = 0.0;
  bool report_have_random = false, report_have_record = false;
  cmd_report->add_option("--episodes", report_episodes, "episodes.jsonl path")->required();
  cmd_report->add_option("--game", report_game, "Baseline game id (uses the baselines table)");
  cmd_report->add_option("--random", report_random, "Random-agent raw score")
      ->each([&](const std::string&) { report_have_random = true; });
  cmd_report->add_option("--record", report_record, "World-record raw score")
      ->each([&](const std::string&) { report_have_record = true; });
  cmd_report->add_option("--out-dir", report_out, "Output directory");

  // ---- eval ----
  auto* cmd_eval = app.add_subcommand("eval", "Run evaluation episodes under the protocol");
  std::string eval_game = "toy:chain", eval_policy = "random",
              eval_out = "saber-out/eval", eval_config;
  int eval_episodes = 1;
  saber_env_config eval_env;
  saber_env_config_defaults(&eval_env);
  uint64_t eval_seed = 0;
  cmd_eval->add_option("--config", eval_config,
                       "Flat key=value config file (flags override)");
  cmd_eval->add_option("--game", eval_game, "Game id (toy:chain, toy:stuck, ...)");
  cmd_eval->add_option("--episodes", eval_episodes, "Episode count");
  cmd_eval->add_option("--policy", eval_policy, "random | fixed:<action> | net:<checkpoint>");
  cmd_eval->add_option("--seed", eval_seed, "Environment seed");
  cmd_eval->add_option("--out-dir", eval_out, "Output directory");
  add_env_flags(cmd_eval, eval_env);

  // ---- train-toy ----
  auto* cmd_train = app.add_subcommand("train-toy", "Single-process lockstep training on a toy");
  saber_train_options train_opts;
  saber_train_options_defaults(&train_opts);
  std::string train_game = "toy:chain", train_out = "saber-out/train-toy", train_config;
  uint64_t train_seed = 0;
  double train_omega = train_opts.replay.omega;
  double train_gamma = train_opts.replay.gamma;
  long train_capacity = static_cast<long>(train_opts.replay.capacity);
  int train_nstep = train_opts.replay.n_step;
  cmd_train->add_option("--config", train_config, "Flat key=value config file");
  cmd_train->add_option("--game", train_game, "Toy game id");
  cmd_train->add_option("--budget", train_opts.env_step_budget, "Environment step budget");
  cmd_train->add_option("--omega", train_omega, "Priority exponent");
  cmd_train->add_option("--gamma", train_gamma, "Discount factor");
  cmd_train->add_option("--n-step", train_nstep, "Multi-step return length");
  cmd_train->add_option("--capacity", train_capacity, "Replay capacity");
  cmd_train->add_option("--batch-size", train_opts.batch_size, "Learner batch size");
  cmd_train->add_option("--min-fill", train_opts.min_fill, "Replay fill before learning");
  cmd_train->add_option("--lr", train_opts.lr, "Optimizer learning rate");
  cmd_train->add_option("--adam-eps", train_opts.adam_eps, "Optimizer epsilon");
  cmd_train->add_option("--n-tau", train_opts.n_tau, "Online quantile samples");
  cmd_train->add_option("--n-tau-prime", train_opts.n_tau_prime, "Target quantile samples");
  cmd_train->add_option("--k-action", train_opts.k_action, "Quantile draws behind argmax");
  cmd_train->add_option("--epsilon-start", train_opts.epsilon_start, "Exploration start");
  cmd_train->add_option("--epsilon-end", train_opts.epsilon_end, "Exploration floor");
  cmd_train->add_option("--epsilon-decay-steps", train_opts.epsilon_decay_steps,
                        "Anneal steps (-1: 35% of budget)");
  cmd_train->add_option("--target-sync", train_opts.target_sync_interval,
                        "Learner steps between target syncs");
  cmd_train->add_option("--lockstep-ratio", train_opts.lockstep_ratio,
                        "Env steps per learner step");
  cmd_train->add_option("--chain-length", train_opts.chain_length, "Chain cells");
  cmd_train->add_option("--chain-horizon", train_opts.chain_horizon, "Chain episode frames");
  cmd_train->add_option("--feature-edge", train_opts.feature_edge,
                        "Downsampled feature grid edge");
  cmd_train->add_option("--curve-interval", train_opts.curve_interval,
                        "Env steps between curve rows");
  cmd_train->add_option("--curve-window", train_opts.curve_window, "Episodes per curve point");
  cmd_train->add_option("--seed", train_seed, "Training seed");
  cmd_train->add_option("--out-dir", train_out, "Output directory");
  add_env_flags(cmd_train, train_opts.env);

  // ---- sweep-omega ----
  auto* cmd_sweep = app.add_subcommand("sweep-omega",
                                       "Train the toy once per priority exponent");
  std::vector<double> sweep_omegas = {0.1, 0.15, 0.2, 0.25};
  std::string sweep_out = "saber-out/sweep-omega";
  long sweep_budget = 50'000;
  uint64_t sweep_seed = 0;
  std::string sweep_game = "toy:chain";
  cmd_sweep->add_option("--omegas", sweep_omegas, "Priority exponents to sweep");
  cmd_sweep->add_option("--budget", sweep_budget, "Environment step budget per run");
  cmd_sweep->add_option("--game", sweep_game, "Toy game id");
  cmd_sweep->add_option("--seed", sweep_seed, "Training seed");
  cmd_sweep->add_option("--out-dir", sweep_out, "Output directory");

  // ---- serve-replay ----
  auto* cmd_serve = app.add_subcommand("serve-replay", "Run the in-RAM replay service");
  std::string serve_bind = "127.0.0.1:7777", serve_out = "saber-out/serve-replay";
  saber_replay_config serve_cfg;
  saber_replay_config_defaults(&serve_cfg);
  long serve_capacity = static_cast<long>(serve_cfg.capacity);
  int serve_stats_interval = 10;
  cmd_serve->add_option("--bind", serve_bind, "host:port to listen on");
  cmd_serve->add_option("--capacity", serve_capacity, "Ring capacity");
  cmd_serve->add_option("--omega", serve_cfg.omega, "Priority exponent");
  cmd_serve->add_option("--stats-interval", serve_stats_interval,
                        "Seconds between stats lines (0: quiet)");
  cmd_serve->add_option("--out-dir", serve_out, "Output directory");

  // ---- actor ----
  auto* cmd_actor = app.add_subcommand("actor", "Play episodes and feed the replay service");
  saber_actor_options actor_opts;
  saber_actor_options_defaults(&actor_opts);
  std::string actor_game = "toy:chain", actor_replay, actor_learner,
              actor_out = "saber-out/actor";
  uint64_t actor_seed = 0;
  cmd_actor->add_option("--game", actor_game, "Game id");
  cmd_actor->add_option("--replay", actor_replay, "Replay service address")->required();
  cmd_actor->add_option("--learner", actor_learner, "Learner parameter address")->required();
  cmd_actor->add_option("--budget", actor_opts.env_step_budget, "Environment step budget");
  cmd_actor->add_option("--transitions", actor_opts.transition_budget,
                        "Stop after shipping exactly this many transitions (0: off)");
  cmd_actor->add_option("--put-batch", actor_opts.put_batch_size, "Transitions per PutBatch");
  cmd_actor->add_option("--param-refresh", actor_opts.param_refresh_interval,
                        "Env steps between parameter fetches");
  cmd_actor->add_option("--feature-edge", actor_opts.feature_edge, "Feature grid edge");
  cmd_actor->add_option("--epsilon-start", actor_opts.epsilon_start, "Exploration start");
  cmd_actor->add_option("--epsilon-end", actor_opts.epsilon_end, "Exploration floor");
  cmd_actor->add_option("--epsilon-decay-steps", actor_opts.epsilon_decay_steps, "Anneal steps");
  cmd_actor->add_option("--seed", actor_seed, "Actor seed");
  cmd_actor->add_option("--out-dir", actor_out, "Output directory");
  add_env_flags(cmd_actor, actor_opts.env);

  // ---- learner ----
  auto* cmd_learner = app.add_subcommand("learner", "Sample, train and publish parameters");
  saber_learner_options learner_opts;
  saber_learner_options_defaults(&learner_opts);
  std::string learner_replay, learner_bind = "127.0.0.1:7788",
              learner_out = "saber-out/learner", learner_ckpt_dir;
  uint64_t learner_seed = 0;
  cmd_learner->add_option("--replay", learner_replay, "Replay service address")->required();
  cmd_learner->add_option("--bind", learner_bind, "Parameter service bind address");
  cmd_learner->add_option("--feature-dim", learner_opts.feature_dim, "Flat input width");
  cmd_learner->add_option("--steps", learner_opts.total_steps, "Learner step budget");
  cmd_learner->add_option("--batch-size", learner_opts.batch_size, "Batch size");
  cmd_learner->add_option("--min-fill", learner_opts.min_fill, "Replay fill before learning");
  cmd_learner->add_option("--lr", learner_opts.lr, "Learning rate");
  cmd_learner->add_option("--target-sync", learner_opts.target_sync_interval,
                          "Steps between target syncs");
  cmd_learner->add_option("--publish-interval", learner_opts.publish_interval,
                          "Steps between parameter publications");
  cmd_learner->add_option("--checkpoint-interval", learner_opts.checkpoint_interval,
                          "Steps between checkpoints");
  cmd_learner->add_option("--checkpoint-dir", learner_ckpt_dir, "Checkpoint directory");
  cmd_learner->add_option("--seed", learner_seed, "Learner seed");
  cmd_learner->add_option("--out-dir", learner_out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  // ---------------- verify-tables ----------------
  if (cmd_verify->parsed()) {
    char* text = nullptr;
    int all_pass = 0;
    int rc = saber_verify_tables(data_dir.c_str(), verify_json ? 1 : 0, &text, &all_pass);
    if (rc != SABER_OK) die(rc, "verify-tables");
    write_config_echo(verify_out, {{"subcommand", "verify-tables"},
                                   {"data_dir", data_dir},
                                   {"json", verify_json ? "1" : "0"}});
    std::cout << text;
    std::ofstream(verify_out + (verify_json ? "/diff.json" : "/diff.txt")) << text;
    saber_string_free(text);
    return all_pass ? kExitOk : kExitFail;
  }

  // ---------------- score ----------------
  if (cmd_score->parsed()) {
    saber_baselines* baselines = nullptr;
    check(saber_baselines_open((data_dir + "/baselines.csv").c_str(), &baselines),
          "load baselines");
    saber_agent_table* by_time = nullptr;
    check(saber_agent_table_open((data_dir + "/scores_200m_by_time.csv").c_str(), &by_time),
          "load agent table");

    const std::string column =
        score_agent + (score_time == "five_min" ? "_5min"
                                                : score_time == "thirty_min" ? "_30min"
                                                                             : "_unlimited");
    saber_eval_time limit = score_time == "five_min"
                                ? SABER_TIME_FIVE_MIN
                                : score_time == "thirty_min" ? SABER_TIME_THIRTY_MIN
                                                             : SABER_TIME_UNLIMITED;
    saber_report* report = nullptr;
    check(saber_report_build(baselines, by_time, column.c_str(), limit, 200'000'000, 2.0,
                             &report),
          "build report");

    fs::create_directories(score_out + "/figures");
    write_config_echo(score_out, {{"subcommand", "score"},
                                  {"data_dir", data_dir},
                                  {"agent", score_agent},
                                  {"time", score_time}});
    char* json = nullptr;
    check(saber_report_to_json(report, &json), "report json");
    std::ofstream(score_out + "/report.json") << json;
    saber_string_free(json);
    check(saber_report_write_csv(report, (score_out + "/figures/scores.csv").c_str()),
          "scores csv");
    check(saber_report_write_histogram_svg(report,
                                           (score_out + "/figures/histogram.svg").c_str()),
          "histogram svg");
    std::printf("%s @200M %s: median %.4f mean %.4f superhuman %d\n", score_agent.c_str(),
                score_time.c_str(), saber_report_median(report), saber_report_mean(report),
                saber_report_superhuman(report));

    if (score_curve && score_agent == "riqn") {
      const std::string table = score_time == "five_min"
                                    ? "/riqn_5min_frames.csv"
                                    : score_time == "thirty_min" ? "/riqn_30min_frames.csv"
                                                                 : "/riqn_saber_frames.csv";
      saber_agent_table* frames = nullptr;
      check(saber_agent_table_open((data_dir + table).c_str(), &frames), "load curve table");
      const char* checkpoints[] = {"10M", "50M", "100M", "200M"};
      const long frame_counts[] = {10'000'000, 50'000'000, 100'000'000, 200'000'000};
      std::vector<saber_report*> series;
      for (int i = 0; i < 4; ++i) {
        saber_report* r = nullptr;
        check(saber_report_build(baselines, frames, checkpoints[i], limit, frame_counts[i], 2.0,
                                 &r),
              "curve report");
        series.push_back(r);
        std::printf("  %s: median %.4f\n", checkpoints[i], saber_report_median(r));
      }
      check(saber_reports_write_curve(series.data(), series.size(),
                                      (score_out + "/figures/curve.csv").c_str(),
                                      (score_out + "/figures/curve.svg").c_str()),
            "curve figures");
      for (auto* r : series) saber_report_free(r);
      saber_agent_table_free(frames);
    }
    saber_report_free(report);
    saber_agent_table_free(by_time);
    saber_baselines_free(baselines);
    return kExitOk;
  }

  // ---------------- report ----------------
  if (cmd_report->parsed()) {
    if (report_game.empty() && !(report_have_random && report_have_record)) {
      std::cerr << "error: provide --game or both --random and --record\n";
      return kExitFail;
    }
    if (!report_game.empty()) {
      saber_baselines* baselines = nullptr;
      check(saber_baselines_open((data_dir + "/baselines.csv").c_str(), &baselines),
            "load baselines");
      saber_game_baseline g;
      check(saber_baselines_find(baselines, report_game.c_str(), &g), "find game");
      if (!g.has_world_record) {
        std::cerr << "error: game `" << report_game << "` has no world record\n";
        return kExitFail;
      }
      report_random = g.random_score;
      report_record = g.world_record;
      saber_baselines_free(baselines);
    }
    std::ifstream in(report_episodes);
    if (!in) {
      std::cerr << "error: cannot open " << report_episodes << "\n";
      return kExitMissingData;
    }
    std::vector<double> raw_scores;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("raw_score")) {
        std::cerr << "error: bad episode line: " << line << "\n";
        return kExitFail;
      }
      raw_scores.push_back(j["raw_score"].get<double>());
    }
    if (raw_scores.empty()) {
      std::cerr << "error: no episodes in " << report_episodes << "\n";
      return kExitFail;
    }
    double mean_raw = 0;
    for (double s : raw_scores) mean_raw += s;
    mean_raw /= static_cast<double>(raw_scores.size());
    double normalized = 0;
    check(saber_normalize_record(mean_raw, report_random, report_record, &normalized),
          "normalize");
    int cls = 0;
    saber_classify(normalized, &cls);

    write_config_echo(report_out, {{"subcommand", "report"},
                                   {"episodes", report_episodes},
                                   {"game", report_game},
                                   {"random", fmt(report_random)},
                                   {"record", fmt(report_record)}});
    nlohmann::ordered_json j;
    j["episodes"] = raw_scores.size();
    j["mean_raw_score"] = mean_raw;
    j["random_score"] = report_random;
    j["world_record"] = report_record;
    j["normalized"] = normalized;
    j["class"] = saber_score_class_name(cls);
    std::ofstream(report_out + "/report.json") << j.dump(2);
    std::cout << j.dump(2) << "\n";
    return kExitOk;
  }

  // ---------------- eval ----------------
  if (cmd_eval->parsed()) {
    if (!eval_config.empty()) {
      auto kv = read_config_file(eval_config);
      auto maybe = [&](const char* key, const char* flag, auto apply) {
        auto it = kv.find(key);
        if (it != kv.end() && cmd_eval->count(flag) == 0) apply(it->second);
      };
      maybe("sticky_xi", "--sticky-xi",
            [&](const std::string& v) { eval_env.sticky_xi = std::stod(v); });
      maybe("max_stuck_frames", "--max-stuck-frames",
            [&](const std::string& v) { eval_env.max_stuck_frames = std::stol(v); });
      maybe("max_episode_frames", "--max-episode-frames",
            [&](const std::string& v) { eval_env.max_episode_frames = std::stol(v); });
      maybe("action_repeat", "--action-repeat",
            [&](const std::string& v) { eval_env.action_repeat = std::stoi(v); });
      maybe("frame_stack", "--frame-stack",
            [&](const std::string& v) { eval_env.frame_stack = std::stoi(v); });
      maybe("seed", "--seed", [&](const std::string& v) { eval_seed = std::stoull(v); });
    }
    eval_env.seed = eval_seed;
    saber_env* env = nullptr;
    check(saber_env_create(eval_game.c_str(), &eval_env, &env), "create environment");

    saber_policy_fn policy = nullptr;
    void* user = nullptr;
    int fixed_action = 0;
    uint64_t rng_state = eval_seed * 2654435761u + 1;
    NetPolicy net_user;
    if (eval_policy == "random") {
      policy = random_policy;
      user = &rng_state;
    } else if (eval_policy.rfind("fixed:", 0) == 0) {
      fixed_action = std::stoi(eval_policy.substr(6));
      policy = fixed_policy;
      user = &fixed_action;
    } else if (eval_policy.rfind("net:", 0) == 0) {
      check(saber_net_load(eval_policy.substr(4).c_str(), &net_user.net), "load checkpoint");
      net_user.frame_stack = eval_env.frame_stack;
      policy = net_policy;
      user = &net_user;
    } else {
      std::cerr << "error: unknown policy `" << eval_policy << "`\n";
      return kExitFail;
    }

    auto echo = env_echo(eval_env);
    echo.insert(echo.begin(), {{"subcommand", "eval"},
                               {"game", eval_game},
                               {"episodes", std::to_string(eval_episodes)},
                               {"policy", eval_policy}});
    write_config_echo(eval_out, echo);

    std::ofstream jsonl(eval_out + "/episodes.jsonl");
    double total_raw = 0;
    for (int ep = 0; ep < eval_episodes; ++ep) {
      saber_episode_log log;
      check(saber_env_run_episode(env, policy, user, &log), "run episode");
      char* line = nullptr;
      check(saber_episode_log_json(&log, &line), "episode json");
      jsonl << line << "\n";
      std::printf("episode %d: raw %.2f frames %ld termination %s rollovers %ld\n", ep,
                  log.raw_score, log.frames, saber_termination_name(log.termination),
                  log.rollover_events);
      saber_string_free(line);
      total_raw += log.raw_score;
    }
    std::printf("mean raw score over %d episode(s): %.2f\n", eval_episodes,
                total_raw / eval_episodes);
    if (net_user.net) saber_net_free(net_user.net);
    saber_env_free(env);
    return kExitOk;
  }

  // ---------------- train-toy ----------------
  if (cmd_train->parsed()) {
    if (!train_config.empty()) {
      auto kv = read_config_file(train_config);
      auto want = [&](const char* key, auto setter) {
        auto it = kv.find(key);
        if (it != kv.end()) setter(it->second);
      };
      // file values apply first; explicit flags already parsed win below
      want("sticky_xi", [&](const std::string& v) {
        if (cmd_train->count("--sticky-xi") == 0) train_opts.env.sticky_xi = std::stod(v);
      });
      want("omega", [&](const std::string& v) {
        if (cmd_train->count("--omega") == 0) train_omega = std::stod(v);
      });
      want("gamma", [&](const std::string& v) {
        if (cmd_train->count("--gamma") == 0) train_gamma = std::stod(v);
      });
      want("lr", [&](const std::string& v) {
        if (cmd_train->count("--lr") == 0) train_opts.lr = std::stod(v);
      });
      want("budget", [&](const std::string& v) {
        if (cmd_train->count("--budget") == 0) train_opts.env_step_budget = std::stol(v);
      });
      want("seed", [&](const std::string& v) {
        if (cmd_train->count("--seed") == 0) train_seed = std::stoull(v);
      });
    }
    train_opts.game_id = train_game.c_str();
    train_opts.replay.omega = train_omega;
    train_opts.replay.gamma = train_gamma;
    train_opts.replay.n_step = train_nstep;
    train_opts.replay.capacity = static_cast<size_t>(train_capacity);
    train_opts.seed = train_seed;
    train_opts.env.seed = train_seed;
    train_opts.out_dir = train_out.c_str();

    auto echo = env_echo(train_opts.env);
    echo.insert(echo.begin(),
                {{"subcommand", "train-toy"},
                 {"game", train_game},
                 {"budget", std::to_string(train_opts.env_step_budget)},
                 {"omega", fmt(train_omega)},
                 {"gamma", fmt(train_gamma)},
                 {"n_step", std::to_string(train_nstep)},
                 {"capacity", std::to_string(train_capacity)},
                 {"batch_size", std::to_string(train_opts.batch_size)},
                 {"min_fill", std::to_string(train_opts.min_fill)},
                 {"lr", fmt(train_opts.lr)},
                 {"adam_eps", fmt(train_opts.adam_eps)},
                 {"n_tau", std::to_string(train_opts.n_tau)},
                 {"n_tau_prime", std::to_string(train_opts.n_tau_prime)},
                 {"k_action", std::to_string(train_opts.k_action)},
                 {"epsilon_start", fmt(train_opts.epsilon_start)},
                 {"epsilon_end", fmt(train_opts.epsilon_end)},
                 {"epsilon_decay_steps", std::to_string(train_opts.epsilon_decay_steps)},
                 {"target_sync", std::to_string(train_opts.target_sync_interval)},
                 {"lockstep_ratio", std::to_string(train_opts.lockstep_ratio)},
                 {"feature_edge", std::to_string(train_opts.feature_edge)},
                 {"train_seed", std::to_string(train_seed)}});
    write_config_echo(train_out, echo);

    saber_train_result result;
    int rc = saber_train_toy(&train_opts, &result);
    if (rc != SABER_OK) die(rc, "train-toy");
    std::printf("env steps %ld, learner steps %ld, episodes %ld\n", result.env_steps,
                result.learner_steps, result.episodes);
    if (result.curve_ready) {
      std::printf("final %d-episode score: %.2f", train_opts.curve_window,
                  result.final_curve_score);
      if (!std::isnan(result.chain_optimal_return))
        std::printf(" (%.1f%% of the oracle optimum %.1f)",
                    100.0 * result.final_curve_score / result.chain_optimal_return,
                    result.chain_optimal_return);
      std::printf("\n");
    } else {
      std::printf("final curve point not ready: fewer than %d episodes\n",
                  train_opts.curve_window);
    }
    std::printf("outputs in %s (curve.csv + checkpoints)\n", train_out.c_str());
    return kExitOk;
  }

  // ---------------- sweep-omega ----------------
  if (cmd_sweep->parsed()) {
    write_config_echo(sweep_out, {{"subcommand", "sweep-omega"},
                                  {"game", sweep_game},
                                  {"budget", std::to_string(sweep_budget)},
                                  {"seed", std::to_string(sweep_seed)}});
    std::ofstream csv(sweep_out + "/sweep.csv");
    csv << "omega,final_curve_score,episodes,learner_steps\n";
    for (double omega : sweep_omegas) {
      saber_train_options opts;
      saber_train_options_defaults(&opts);
      opts.game_id = sweep_game.c_str();
      opts.env_step_budget = sweep_budget;
      opts.replay.omega = omega;
      opts.seed = sweep_seed;
      opts.env.seed = sweep_seed;
      char sub[64];
      std::snprintf(sub, sizeof(sub), "%s/omega_%.2f", sweep_out.c_str(), omega);
      fs::create_directories(sub);
      std::string sub_dir = sub;
      opts.out_dir = sub_dir.c_str();
      saber_train_result result;
      int rc = saber_train_toy(&opts, &result);
      if (rc != SABER_OK) die(rc, "sweep-omega");
      std::printf("omega %.2f: final %.2f (episodes %ld)\n", omega, result.final_curve_score,
                  result.episodes);
      csv << omega << ',' << result.final_curve_score << ',' << result.episodes << ','
          << result.learner_steps << "\n";
    }
    return kExitOk;
  }

  // ---------------- serve-replay ----------------
  if (cmd_serve->parsed()) {
    serve_cfg.capacity = static_cast<size_t>(serve_capacity);
    saber_server* server = nullptr;
    check(saber_serve_replay(serve_bind.c_str(), &serve_cfg, &server), "serve-replay");
    char address[64];
    saber_server_address(server, address, sizeof(address));
    write_config_echo(serve_out, {{"subcommand", "serve-replay"},
                                  {"bind", serve_bind},
                                  {"address", address},
                                  {"capacity", std::to_string(serve_capacity)},
                                  {"omega", fmt(serve_cfg.omega)}});
    std::printf("replay service listening on %s\n", address);
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    int elapsed = 0;
    while (!g_interrupted) {
      std::this_thread::sleep_for(std::chrono::seconds(1));
      if (serve_stats_interval > 0 && ++elapsed % serve_stats_interval == 0) {
        char* stats = nullptr;
        if (saber_server_stats_json(server, &stats) == SABER_OK) {
          std::printf("%s\n", stats);
          std::fflush(stdout);
          saber_string_free(stats);
        }
      }
    }
    char* stats = nullptr;
    if (saber_server_stats_json(server, &stats) == SABER_OK) {
      std::ofstream(serve_out + "/stats.json") << stats;
      saber_string_free(stats);
    }
    saber_server_stop_free(server);
    return kExitOk;
  }

  // ---------------- actor ----------------
  if (cmd_actor->parsed()) {
    actor_opts.game_id = actor_game.c_str();
    actor_opts.replay_address = actor_replay.c_str();
    actor_opts.learner_address = actor_learner.c_str();
    actor_opts.seed = actor_seed;
    actor_opts.env.seed = actor_seed;
    auto echo = env_echo(actor_opts.env);
    echo.insert(echo.begin(), {{"subcommand", "actor"},
                               {"game", actor_game},
                               {"replay", actor_replay},
                               {"learner", actor_learner},
                               {"budget", std::to_string(actor_opts.env_step_budget)},
                               {"actor_seed", std::to_string(actor_seed)}});
    write_config_echo(actor_out, echo);
    saber_actor_stats stats;
    int rc = saber_actor_run(&actor_opts, &stats);
    if (rc != SABER_OK) die(rc, "actor");
    std::printf("actor done: env_steps %ld episodes %ld sent %llu acked %llu param_version %llu\n",
                stats.env_steps, stats.episodes,
                static_cast<unsigned long long>(stats.transitions_sent),
                static_cast<unsigned long long>(stats.acked),
                static_cast<unsigned long long>(stats.final_param_version));
    return kExitOk;
  }

  // ---------------- learner ----------------
  if (cmd_learner->parsed()) {
    learner_opts.replay_address = learner_replay.c_str();
    learner_opts.bind_address = learner_bind.c_str();
    learner_opts.checkpoint_dir = learner_ckpt_dir.empty() ? nullptr : learner_ckpt_dir.c_str();
    learner_opts.seed = learner_seed;
    write_config_echo(learner_out,
                      {{"subcommand", "learner"},
                       {"replay", learner_replay},
                       {"bind", learner_bind},
                       {"feature_dim", std::to_string(learner_opts.feature_dim)},
                       {"steps", std::to_string(learner_opts.total_steps)},
                       {"batch_size", std::to_string(learner_opts.batch_size)},
                       {"min_fill", std::to_string(learner_opts.min_fill)},
                       {"lr", fmt(learner_opts.lr)},
                       {"learner_seed", std::to_string(learner_seed)}});
    saber_learner_stats stats;
    int rc = saber_learner_run(&learner_opts, &stats);
    if (rc != SABER_OK) die(rc, "learner");
    std::printf("learner done: steps %ld published_version %llu last_loss %.6f%s\n", stats.steps,
                static_cast<unsigned long long>(stats.published_version), stats.last_loss,
                stats.timed_out_waiting_for_fill ? " (timed out waiting for fill)" : "");
    return kExitOk;
  }

  return kExitOk;
}
