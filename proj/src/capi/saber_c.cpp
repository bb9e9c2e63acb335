#include "saber/saber.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "core/env.hpp"
#include "core/error.hpp"
#include "core/fabric.hpp"
#include "core/figures.hpp"
#include "core/image.hpp"
#include "core/net.hpp"
#include "core/replay.hpp"
#include "core/replay_service.hpp"
#include "core/scoring.hpp"
#include "core/table_check.hpp"
#include "core/toy_games.hpp"
#include "core/trainer.hpp"

namespace {

thread_local std::string g_last_error;

int map_code(saber::ErrorCode code) {
  using saber::ErrorCode;
  switch (code) {
    case ErrorCode::invalid_argument: return SABER_ERR_INVALID_ARGUMENT;
    case ErrorCode::parse: return SABER_ERR_PARSE;
    case ErrorCode::validation: return SABER_ERR_VALIDATION;
    case ErrorCode::io: return SABER_ERR_IO;
    case ErrorCode::contract: return SABER_ERR_CONTRACT;
    case ErrorCode::numeric: return SABER_ERR_NUMERIC;
    case ErrorCode::network: return SABER_ERR_NETWORK;
  }
  return SABER_ERR_UNKNOWN;
}

template <typename F>
int guard(F&& f) {
  try {
    f();
    return SABER_OK;
  } catch (const saber::Error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SABER_ERR_UNKNOWN;
  } catch (...) {
    g_last_error = "unknown failure";
    return SABER_ERR_UNKNOWN;
  }
}

int fail_arg(const char* message) {
  g_last_error = message;
  return SABER_ERR_INVALID_ARGUMENT;
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void copy_name(char* dst, size_t cap, const std::string& src) {
  std::snprintf(dst, cap, "%s", src.c_str());
}

saber::EvalTimeLimit to_limit(saber_eval_time t) {
  switch (t) {
    case SABER_TIME_FIVE_MIN: return saber::EvalTimeLimit::five_min;
    case SABER_TIME_THIRTY_MIN: return saber::EvalTimeLimit::thirty_min;
    default: return saber::EvalTimeLimit::unlimited;
  }
}

saber::SaberConfig to_env_config(const saber_env_config& c) {
  saber::SaberConfig cfg;
  cfg.sticky_xi = c.sticky_xi;
  cfg.action_set_size = c.action_set_size;
  cfg.max_stuck_frames = c.max_stuck_frames;
  cfg.max_episode_frames = c.max_episode_frames;
  cfg.action_repeat = c.action_repeat;
  cfg.frame_stack = c.frame_stack;
  cfg.seed = c.seed;
  return cfg;
}

saber::ReplayConfig to_replay_config(const saber_replay_config& c) {
  saber::ReplayConfig cfg;
  cfg.capacity = c.capacity;
  cfg.omega = c.omega;
  cfg.beta_start = c.beta_start;
  cfg.beta_end = c.beta_end;
  cfg.n_step = c.n_step;
  cfg.gamma = c.gamma;
  return cfg;
}

void fill_log(saber_episode_log& out, const saber::EpisodeLog& log) {
  out.raw_score = log.raw_score;
  out.clipped_return = log.clipped_return;
  out.frames = log.frames;
  out.termination = static_cast<int>(log.termination);
  out.rollover_events = log.rollover_events;
}

}  // namespace

struct saber_baselines {
  saber::BaselineTable table;
};
struct saber_agent_table {
  saber::AgentTable table;
};
struct saber_report {
  saber::EvaluationReport report;
};
struct saber_env {
  std::unique_ptr<saber::Emulator> emulator;
  std::unique_ptr<saber::SaberEnv> env;
};
struct saber_replay {
  std::unique_ptr<saber::ReplayStore> store;
};
struct saber_batch {
  saber::SampleBatch batch;
};
struct saber_server {
  std::unique_ptr<saber::ReplayService> service;
};
struct saber_net {
  saber::ArchSpec arch;
  std::unique_ptr<saber::QuantileNetwork<float>> net;
  std::vector<float> params;
  saber::Rng rng{0};
};

extern "C" {

const char* saber_version(void) { return "1.0.0"; }

const char* saber_last_error(void) { return g_last_error.c_str(); }

void saber_string_free(char* s) { delete[] s; }

/* --- scoring ----------------------------------------------------------- */

int saber_baselines_open(const char* csv_path, saber_baselines** out) {
  if (!csv_path || !out) return fail_arg("null argument");
  return guard([&] { *out = new saber_baselines{saber::BaselineTable::load(csv_path)}; });
}

void saber_baselines_free(saber_baselines* b) { delete b; }

size_t saber_baselines_count(const saber_baselines* b) { return b ? b->table.size() : 0; }

size_t saber_baselines_records_present(const saber_baselines* b) {
  return b ? b->table.records_present() : 0;
}

static void fill_baseline(saber_game_baseline& out, const saber::GameBaseline& g) {
  copy_name(out.game, sizeof(out.game), g.game_id);
  out.random_score = g.random_score;
  out.has_human_beginner = g.human_beginner.has_value();
  out.human_beginner = g.human_beginner.value_or(0.0);
  out.has_world_record = g.world_record.has_value();
  out.world_record = g.world_record.value_or(0.0);
  out.extrapolated = g.extrapolated;
}

int saber_baselines_get(const saber_baselines* b, size_t index, saber_game_baseline* out) {
  if (!b || !out) return fail_arg("null argument");
  if (index >= b->table.size()) return fail_arg("index out of range");
  fill_baseline(*out, b->table.rows()[index]);
  return SABER_OK;
}

int saber_baselines_find(const saber_baselines* b, const char* game, saber_game_baseline* out) {
  if (!b || !game || !out) return fail_arg("null argument");
  const saber::GameBaseline* g = b->table.find(game);
  if (!g) return fail_arg("unknown game");
  fill_baseline(*out, *g);
  return SABER_OK;
}

int saber_beginner_baseline_stats(const saber_baselines* b, double* median, double* mean,
                                  size_t* games_used) {
  if (!b || !median || !mean) return fail_arg("null argument");
  return guard([&] {
    auto stats = saber::beginner_baseline_stats(b->table);
    *median = stats.median;
    *mean = stats.mean;
    if (games_used) *games_used = stats.games_used.size();
  });
}

int saber_normalize_record(double agent, double random_score, double record, double* out) {
  if (!out) return fail_arg("null argument");
  return guard([&] { *out = saber::normalize_record(agent, random_score, record); });
}

int saber_normalize_reference(double agent, double random_score, double reference, double* out) {
  if (!out) return fail_arg("null argument");
  return guard([&] { *out = saber::normalize_reference(agent, random_score, reference); });
}

int saber_classify(double normalized, int* out_class) {
  if (!out_class) return fail_arg("null argument");
  *out_class = static_cast<int>(saber::classify(normalized));
  return SABER_OK;
}

const char* saber_score_class_name(int score_class) {
  if (score_class < 0 || score_class > 4) return "?";
  return saber::to_string(static_cast<saber::ScoreClass>(score_class));
}

int saber_agent_table_open(const char* csv_path, saber_agent_table** out) {
  if (!csv_path || !out) return fail_arg("null argument");
  return guard([&] { *out = new saber_agent_table{saber::AgentTable::load(csv_path)}; });
}

void saber_agent_table_free(saber_agent_table* t) { delete t; }

size_t saber_agent_table_columns(const saber_agent_table* t) {
  return t ? t->table.columns.size() : 0;
}

int saber_agent_table_column_name(const saber_agent_table* t, size_t index, char* buf,
                                  size_t cap) {
  if (!t || !buf) return fail_arg("null argument");
  if (index >= t->table.columns.size()) return fail_arg("index out of range");
  copy_name(buf, cap, t->table.columns[index]);
  return SABER_OK;
}

int saber_report_build(const saber_baselines* b, const saber_agent_table* t, const char* column,
                       saber_eval_time time_limit, long train_frames, double mean_cap,
                       saber_report** out) {
  if (!b || !t || !column || !out) return fail_arg("null argument");
  return guard([&] {
    auto scores = t->table.extract(column, to_limit(time_limit), train_frames);
    auto normalized = saber::normalize_scores(scores, b->table);
    *out = new saber_report{saber::aggregate(normalized, mean_cap, train_frames)};
  });
}

int saber_report_from_values(const double* normalized, size_t count, double mean_cap,
                             saber_report** out) {
  if (!normalized || !out) return fail_arg("null argument");
  return guard([&] {
    std::vector<saber::NormalizedScore> scores;
    for (size_t i = 0; i < count; ++i)
      scores.push_back({"value_" + std::to_string(i), normalized[i],
                        saber::BaselineKind::world_record});
    *out = new saber_report{saber::aggregate(scores, mean_cap)};
  });
}

void saber_report_free(saber_report* r) { delete r; }

double saber_report_median(const saber_report* r) { return r ? r->report.median : 0.0; }
double saber_report_mean(const saber_report* r) { return r ? r->report.mean : 0.0; }
int saber_report_superhuman(const saber_report* r) { return r ? r->report.superhuman_count : 0; }

void saber_report_histogram(const saber_report* r, int counts[5]) {
  if (!r || !counts) return;
  for (size_t i = 0; i < 5; ++i) counts[i] = r->report.histogram[i];
}

int saber_report_to_json(const saber_report* r, char** out) {
  if (!r || !out) return fail_arg("null argument");
  return guard([&] { *out = dup_string(saber::report_to_json(r->report)); });
}

int saber_report_write_csv(const saber_report* r, const char* path) {
  if (!r || !path) return fail_arg("null argument");
  return guard([&] { saber::write_report_csv(r->report, path); });
}

int saber_report_write_histogram_svg(const saber_report* r, const char* path) {
  if (!r || !path) return fail_arg("null argument");
  return guard([&] { saber::write_histogram_svg(r->report, path); });
}

int saber_reports_write_curve(const saber_report* const* reports, size_t count,
                              const char* csv_path, const char* svg_path) {
  if (!reports) return fail_arg("null argument");
  return guard([&] {
    std::vector<saber::EvaluationReport> list;
    for (size_t i = 0; i < count; ++i) list.push_back(reports[i]->report);
    if (csv_path) saber::write_curve_csv(list, csv_path);
    if (svg_path) saber::write_curve_svg(list, svg_path);
  });
}

int saber_training_curve_score(const double* episode_scores, size_t count, int window,
                               double* out) {
  if (!episode_scores || !out) return fail_arg("null argument");
  return guard([&] {
    std::vector<double> scores(episode_scores, episode_scores + count);
    *out = saber::training_curve_score(scores, window);
  });
}

int saber_verify_tables(const char* data_dir, int as_json, char** report_text, int* all_pass) {
  if (!data_dir) return fail_arg("null argument");
  return guard([&] {
    auto result = saber::verify_tables(data_dir);
    if (report_text)
      *report_text = dup_string(as_json ? saber::table_check_json(result)
                                        : saber::table_check_text(result));
    if (all_pass) *all_pass = result.all_pass ? 1 : 0;
  });
}

/* --- environment -------------------------------------------------------- */

void saber_env_config_defaults(saber_env_config* cfg) {
  if (!cfg) return;
  saber::SaberConfig d;
  cfg->sticky_xi = d.sticky_xi;
  cfg->action_set_size = d.action_set_size;
  cfg->max_stuck_frames = d.max_stuck_frames;
  cfg->max_episode_frames = d.max_episode_frames;
  cfg->action_repeat = d.action_repeat;
  cfg->frame_stack = d.frame_stack;
  cfg->seed = d.seed;
}

const char* saber_termination_name(int termination) {
  if (termination < 0 || termination > 4) return "?";
  return saber::to_string(static_cast<saber::Termination>(termination));
}

int saber_env_create(const char* game_id, const saber_env_config* cfg, saber_env** out) {
  if (!game_id || !cfg || !out) return fail_arg("null argument");
  return guard([&] {
    auto handle = std::make_unique<saber_env>();
    handle->emulator = saber::make_toy_game(game_id);
    handle->env = std::make_unique<saber::SaberEnv>(*handle->emulator, to_env_config(*cfg));
    *out = handle.release();
  });
}

void saber_env_free(saber_env* env) { delete env; }

int saber_env_reset(saber_env* env) {
  if (!env) return fail_arg("null argument");
  return guard([&] { env->env->reset(); });
}

int saber_env_step(saber_env* env, int action, saber_step_result* out) {
  if (!env || !out) return fail_arg("null argument");
  return guard([&] {
    auto r = env->env->step(action);
    out->observation = r.observation;
    out->clipped_reward = r.clipped_reward;
    out->raw_reward = r.raw_reward;
    out->done = r.done;
    out->termination = static_cast<int>(r.termination);
  });
}

int saber_env_observation(const saber_env* env, const float** data, size_t* count) {
  if (!env || !data || !count) return fail_arg("null argument");
  *data = env->env->observation();
  *count = env->env->observation_size();
  return SABER_OK;
}

int saber_env_log(const saber_env* env, saber_episode_log* out) {
  if (!env || !out) return fail_arg("null argument");
  fill_log(*out, env->env->log());
  return SABER_OK;
}

int saber_env_run_episode(saber_env* env, saber_policy_fn policy, void* user,
                          saber_episode_log* out) {
  if (!env || !policy || !out) return fail_arg("null argument");
  return guard([&] {
    auto log = saber::run_episode(*env->env, [&](const float* obs, int stack, int edge) {
      return policy(obs, stack, edge, user);
    });
    fill_log(*out, log);
  });
}

int saber_episode_log_json(const saber_episode_log* log, char** out) {
  if (!log || !out) return fail_arg("null argument");
  return guard([&] {
    saber::EpisodeLog l;
    l.raw_score = log->raw_score;
    l.clipped_return = log->clipped_return;
    l.frames = log->frames;
    l.termination = static_cast<saber::Termination>(log->termination);
    l.rollover_events = log->rollover_events;
    *out = dup_string(saber::episode_log_json(l));
  });
}

int saber_clip_reward(double raw, double* clipped, int* rollover) {
  if (!clipped || !rollover) return fail_arg("null argument");
  auto r = saber::clip_reward(raw);
  *clipped = r.clipped;
  *rollover = r.rollover;
  return SABER_OK;
}

int saber_preprocess_frame(const uint8_t* rgb, int height, int width, float* out84x84) {
  if (!rgb || !out84x84) return fail_arg("null argument");
  return guard([&] { saber::preprocess_frame(rgb, height, width, out84x84); });
}

int saber_game_ids(char* buf, size_t cap) {
  if (!buf) return fail_arg("null argument");
  std::string joined;
  for (const auto& id : saber::toy_game_ids()) {
    if (!joined.empty()) joined += ",";
    joined += id;
  }
  copy_name(buf, cap, joined);
  return SABER_OK;
}

/* --- replay --------------------------------------------------------------- */

void saber_replay_config_defaults(saber_replay_config* cfg) {
  if (!cfg) return;
  saber::ReplayConfig d;
  cfg->capacity = d.capacity;
  cfg->omega = d.omega;
  cfg->beta_start = d.beta_start;
  cfg->beta_end = d.beta_end;
  cfg->n_step = d.n_step;
  cfg->gamma = d.gamma;
  cfg->seed = 0;
}

int saber_replay_create(const saber_replay_config* cfg, saber_replay** out) {
  if (!cfg || !out) return fail_arg("null argument");
  return guard([&] {
    *out = new saber_replay{
        std::make_unique<saber::ReplayStore>(to_replay_config(*cfg), cfg->seed)};
  });
}

void saber_replay_free(saber_replay* r) { delete r; }

int saber_replay_push(saber_replay* r, const saber_transition* t, const uint8_t* obs,
                      size_t obs_len, const uint8_t* next_obs, size_t next_obs_len,
                      uint32_t* slot_out) {
  if (!r || !t || !obs || !next_obs) return fail_arg("null argument");
  return guard([&] {
    saber::Transition tr;
    tr.action = t->action;
    tr.n_step_return = t->n_step_return;
    tr.discount_pow_n = t->discount_pow_n;
    tr.priority = t->priority;
    uint32_t slot = r->store->push(tr, std::vector<uint8_t>(obs, obs + obs_len),
                                   std::vector<uint8_t>(next_obs, next_obs + next_obs_len));
    if (slot_out) *slot_out = slot;
  });
}

int saber_replay_sample(saber_replay* r, int batch, double beta, saber_batch** out) {
  if (!r || !out) return fail_arg("null argument");
  return guard([&] { *out = new saber_batch{r->store->sample(batch, beta)}; });
}

int saber_replay_update_priorities(saber_replay* r, const uint32_t* slots,
                                   const uint32_t* versions, const double* priorities,
                                   size_t count, size_t* applied) {
  if (!r || !slots || !versions || !priorities) return fail_arg("null argument");
  return guard([&] {
    size_t n = r->store->update_priorities(
        std::vector<uint32_t>(slots, slots + count),
        std::vector<uint32_t>(versions, versions + count),
        std::vector<double>(priorities, priorities + count));
    if (applied) *applied = n;
  });
}

size_t saber_replay_size(const saber_replay* r) { return r ? r->store->size() : 0; }

int saber_replay_stats_json(const saber_replay* r, char** out) {
  if (!r || !out) return fail_arg("null argument");
  return guard([&] { *out = dup_string(saber::replay_stats_json(r->store->stats())); });
}

size_t saber_batch_size(const saber_batch* b) { return b ? b->batch.transitions.size() : 0; }

int saber_batch_transition(const saber_batch* b, size_t index, saber_transition* out) {
  if (!b || !out) return fail_arg("null argument");
  if (index >= b->batch.transitions.size()) return fail_arg("index out of range");
  const auto& t = b->batch.transitions[index];
  out->obs_key = t.obs_key;
  out->next_obs_key = t.next_obs_key;
  out->action = t.action;
  out->n_step_return = t.n_step_return;
  out->discount_pow_n = t.discount_pow_n;
  out->priority = t.priority;
  return SABER_OK;
}

int saber_batch_slot(const saber_batch* b, size_t index, uint32_t* slot, uint32_t* version) {
  if (!b || !slot || !version) return fail_arg("null argument");
  if (index >= b->batch.slots.size()) return fail_arg("index out of range");
  *slot = b->batch.slots[index];
  *version = b->batch.versions[index];
  return SABER_OK;
}

int saber_batch_is_weight(const saber_batch* b, size_t index, double* out) {
  if (!b || !out) return fail_arg("null argument");
  if (index >= b->batch.is_weights.size()) return fail_arg("index out of range");
  *out = b->batch.is_weights[index];
  return SABER_OK;
}

int saber_batch_obs(const saber_batch* b, size_t index, const uint8_t** data, size_t* len) {
  if (!b || !data || !len) return fail_arg("null argument");
  if (index >= b->batch.obs.size()) return fail_arg("index out of range");
  *data = b->batch.obs[index].data();
  *len = b->batch.obs[index].size();
  return SABER_OK;
}

int saber_batch_next_obs(const saber_batch* b, size_t index, const uint8_t** data, size_t* len) {
  if (!b || !data || !len) return fail_arg("null argument");
  if (index >= b->batch.next_obs.size()) return fail_arg("index out of range");
  *data = b->batch.next_obs[index].data();
  *len = b->batch.next_obs[index].size();
  return SABER_OK;
}

void saber_batch_free(saber_batch* b) { delete b; }

/* --- fabric ---------------------------------------------------------------- */

int saber_serve_replay(const char* bind_address, const saber_replay_config* cfg,
                       saber_server** out) {
  if (!bind_address || !cfg || !out) return fail_arg("null argument");
  return guard([&] {
    auto service = std::make_unique<saber::ReplayService>(bind_address, to_replay_config(*cfg),
                                                          cfg->seed);
    service->start();
    *out = new saber_server{std::move(service)};
  });
}

int saber_server_address(const saber_server* s, char* buf, size_t cap) {
  if (!s || !buf) return fail_arg("null argument");
  copy_name(buf, cap, s->service->address());
  return SABER_OK;
}

int saber_server_stats_json(const saber_server* s, char** out) {
  if (!s || !out) return fail_arg("null argument");
  return guard([&] { *out = dup_string(s->service->stats_json()); });
}

void saber_server_stop_free(saber_server* s) {
  if (!s) return;
  s->service->stop();
  delete s;
}

void saber_actor_options_defaults(saber_actor_options* o) {
  if (!o) return;
  std::memset(o, 0, sizeof(*o));
  saber::ActorRunConfig d;
  o->game_id = "toy:chain";
  saber_env_config_defaults(&o->env);
  o->env_step_budget = d.env_step_budget;
  o->put_batch_size = d.put_batch_size;
  o->param_refresh_interval = d.param_refresh_interval;
  o->feature_edge = d.feature_edge;
  o->n_step = d.n_step;
  o->gamma = d.gamma;
  saber::LossConfig loss;
  o->n_tau = loss.n_tau;
  o->n_tau_prime = loss.n_tau_prime;
  o->k_action = loss.k_action;
  o->kappa = loss.kappa;
  o->epsilon_decay_steps = 1;
}

int saber_actor_run(const saber_actor_options* options, saber_actor_stats* out) {
  if (!options || !options->game_id || !options->replay_address || !options->learner_address)
    return fail_arg("null argument");
  return guard([&] {
    saber::ActorRunConfig cfg;
    cfg.game_id = options->game_id;
    cfg.replay_address = options->replay_address;
    cfg.learner_address = options->learner_address;
    cfg.env = to_env_config(options->env);
    cfg.loss.n_tau = options->n_tau;
    cfg.loss.n_tau_prime = options->n_tau_prime;
    cfg.loss.k_action = options->k_action;
    cfg.loss.kappa = options->kappa;
    cfg.loss.gamma = options->gamma;
    cfg.loss.n_step = options->n_step;
    cfg.exploration.epsilon_start = options->epsilon_start;
    cfg.exploration.epsilon_end = options->epsilon_end;
    cfg.exploration.decay_steps = options->epsilon_decay_steps;
    cfg.n_step = options->n_step;
    cfg.gamma = options->gamma;
    cfg.feature_edge = options->feature_edge;
    cfg.env_step_budget = options->env_step_budget;
    cfg.transition_budget = options->transition_budget;
    cfg.put_batch_size = options->put_batch_size;
    cfg.param_refresh_interval = options->param_refresh_interval;
    cfg.seed = options->seed;
    auto result = saber::actor_run(cfg);
    if (out) {
      out->env_steps = result.env_steps;
      out->episodes = result.episodes;
      out->transitions_sent = result.transitions_sent;
      out->acked = result.acked;
      out->final_param_version = result.final_param_version;
    }
  });
}

void saber_learner_options_defaults(saber_learner_options* o) {
  if (!o) return;
  std::memset(o, 0, sizeof(*o));
  saber::LearnerRunConfig d;
  o->bind_address = "127.0.0.1:0";
  o->feature_dim = 400;
  o->batch_size = d.batch_size;
  o->min_fill = d.min_fill;
  o->total_steps = d.total_steps;
  o->target_sync_interval = d.target_sync_interval;
  o->publish_interval = d.publish_interval;
  o->checkpoint_interval = d.checkpoint_interval;
  o->lr = d.adam.lr;
  o->adam_eps = d.adam.eps;
  saber::LossConfig loss;
  o->n_tau = loss.n_tau;
  o->n_tau_prime = loss.n_tau_prime;
  o->k_action = loss.k_action;
  o->kappa = loss.kappa;
  o->gamma = loss.gamma;
  o->beta_start = d.beta_start;
  o->beta_end = d.beta_end;
}

int saber_learner_run(const saber_learner_options* options, saber_learner_stats* out) {
  if (!options || !options->replay_address || !options->bind_address)
    return fail_arg("null argument");
  return guard([&] {
    saber::LearnerRunConfig cfg;
    cfg.replay_address = options->replay_address;
    cfg.bind_address = options->bind_address;
    cfg.arch = saber::ArchSpec::flat_toy(options->feature_dim);
    cfg.loss.n_tau = options->n_tau;
    cfg.loss.n_tau_prime = options->n_tau_prime;
    cfg.loss.k_action = options->k_action;
    cfg.loss.kappa = options->kappa;
    cfg.loss.gamma = options->gamma;
    cfg.adam.lr = options->lr;
    cfg.adam.eps = options->adam_eps;
    cfg.batch_size = options->batch_size;
    cfg.min_fill = options->min_fill;
    cfg.total_steps = options->total_steps;
    cfg.target_sync_interval = options->target_sync_interval;
    cfg.publish_interval = options->publish_interval;
    cfg.checkpoint_interval = options->checkpoint_interval;
    if (options->checkpoint_dir) cfg.checkpoint_dir = options->checkpoint_dir;
    cfg.beta_start = options->beta_start;
    cfg.beta_end = options->beta_end;
    cfg.min_fill_timeout_ms = options->min_fill_timeout_ms;
    cfg.seed = options->seed;
    saber::LearnerNode node(cfg);
    auto result = node.run();
    if (out) {
      out->steps = result.steps;
      out->published_version = result.published_version;
      out->last_loss = result.last_loss;
      out->timed_out_waiting_for_fill = result.timed_out_waiting_for_fill;
    }
  });
}

/* --- toy training -------------------------------------------------------- */

void saber_train_options_defaults(saber_train_options* o) {
  if (!o) return;
  std::memset(o, 0, sizeof(*o));
  saber::TrainToyConfig d;
  d.apply_toy_defaults();
  o->game_id = "toy:chain";
  saber::ChainGameConfig chain;
  o->chain_length = chain.length;
  o->chain_horizon = chain.horizon;
  o->chain_exit_reward = chain.exit_reward;
  saber_env_config_defaults(&o->env);
  o->env.max_stuck_frames = d.env.max_stuck_frames;
  o->env.max_episode_frames = d.env.max_episode_frames;
  saber_replay_config_defaults(&o->replay);
  o->env_step_budget = d.env_step_budget;
  o->batch_size = d.batch_size;
  o->min_fill = d.min_fill;
  o->lockstep_ratio = d.lockstep_ratio;
  o->target_sync_interval = d.target_sync_interval;
  o->feature_edge = d.feature_edge;
  o->curve_interval = d.curve_interval;
  o->curve_window = d.curve_window;
  o->lr = 1e-3;  /* toy-scale rate; the cited large-scale value is 5e-5 */
  o->adam_eps = 3.125e-4;
  saber::LossConfig loss;
  o->n_tau = loss.n_tau;
  o->n_tau_prime = loss.n_tau_prime;
  o->k_action = 8;
  o->kappa = loss.kappa;
  o->epsilon_start = 1.0;
  o->epsilon_end = 0.002;
  o->epsilon_decay_steps = -1; /* 35% of the budget */
}

int saber_train_toy(const saber_train_options* options, saber_train_result* out) {
  if (!options || !options->game_id) return fail_arg("null argument");
  return guard([&] {
    saber::TrainToyConfig cfg;
    cfg.game_id = options->game_id;
    cfg.chain.length = options->chain_length;
    cfg.chain.horizon = options->chain_horizon;
    cfg.chain.exit_reward = options->chain_exit_reward;
    cfg.env = to_env_config(options->env);
    cfg.replay = to_replay_config(options->replay);
    cfg.loss.n_tau = options->n_tau;
    cfg.loss.n_tau_prime = options->n_tau_prime;
    cfg.loss.k_action = options->k_action;
    cfg.loss.kappa = options->kappa;
    cfg.loss.gamma = options->replay.gamma;
    cfg.loss.n_step = options->replay.n_step;
    cfg.adam.lr = options->lr;
    cfg.adam.eps = options->adam_eps;
    cfg.exploration.epsilon_start = options->epsilon_start;
    cfg.exploration.epsilon_end = options->epsilon_end;
    cfg.exploration.decay_steps = options->epsilon_decay_steps < 0
                                      ? static_cast<long>(0.35 * options->env_step_budget)
                                      : options->epsilon_decay_steps;
    cfg.batch_size = options->batch_size;
    cfg.min_fill = options->min_fill;
    cfg.env_step_budget = options->env_step_budget;
    cfg.lockstep_ratio = options->lockstep_ratio;
    cfg.target_sync_interval = options->target_sync_interval;
    cfg.feature_edge = options->feature_edge;
    cfg.curve_interval = options->curve_interval;
    cfg.curve_window = options->curve_window;
    cfg.seed = options->seed;
    if (options->out_dir) cfg.out_dir = options->out_dir;
    auto result = saber::train_toy(cfg);
    if (out) {
      out->env_steps = result.env_steps;
      out->learner_steps = result.learner_steps;
      out->episodes = result.episodes;
      out->final_curve_score = result.final_curve_score;
      out->curve_ready = result.curve_ready;
      out->final_loss = result.final_loss;
      out->chain_optimal_return =
          cfg.game_id == "toy:chain"
              ? saber::chain_game_optimal_return(cfg.chain)
              : std::numeric_limits<double>::quiet_NaN();
    }
  });
}

/* --- checkpoint policies --------------------------------------------------- */

int saber_net_load(const char* checkpoint_path, saber_net** out) {
  if (!checkpoint_path || !out) return fail_arg("null argument");
  return guard([&] {
    auto handle = std::make_unique<saber_net>();
    handle->params = saber::load_checkpoint<float>(checkpoint_path, &handle->arch);
    handle->net = std::make_unique<saber::QuantileNetwork<float>>(handle->arch);
    *out = handle.release();
  });
}

void saber_net_free(saber_net* n) { delete n; }

size_t saber_net_input_size(const saber_net* n) { return n ? n->net->input_size() : 0; }

int saber_net_act(saber_net* n, const float* observation, int frame_stack, int* action) {
  if (!n || !observation || !action) return fail_arg("null argument");
  return guard([&] {
    const size_t input = n->net->input_size();
    const size_t per_frame = input / frame_stack;
    const int edge = static_cast<int>(std::lround(std::sqrt(static_cast<double>(per_frame))));
    if (static_cast<size_t>(edge) * edge * frame_stack != input)
      saber::raise(saber::ErrorCode::validation,
                   "checkpoint input shape does not match the frame stack");
    auto features = saber::downsample_observation(observation, frame_stack, edge);
    auto noise = n->net->zero_noise();
    auto q = n->net->q_values(features, n->params, noise, 32, n->rng);
    int best = 0;
    for (size_t a = 1; a < q.size(); ++a)
      if (q[a] > q[best]) best = static_cast<int>(a);
    *action = best;
  });
}

} /* extern "C" */
