/* SABER evaluation protocol + Rainbow-IQN training fabric: C API.
 *
 * Conventions: every function returning int yields SABER_OK (0) on success
 * or an error code; saber_last_error() returns a thread-local message for
 * the most recent failure on the calling thread. Opaque handles are created
 * by *_create/_open and released by the matching *_free. Strings returned
 * through char** are heap-allocated and released with saber_string_free().
 */
#ifndef SABER_H
#define SABER_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define SABER_OK 0
#define SABER_ERR_INVALID_ARGUMENT 1
#define SABER_ERR_PARSE 2
#define SABER_ERR_VALIDATION 3
#define SABER_ERR_IO 4
#define SABER_ERR_CONTRACT 5
#define SABER_ERR_NUMERIC 6
#define SABER_ERR_NETWORK 7
#define SABER_ERR_UNKNOWN 99

const char* saber_version(void);
const char* saber_last_error(void);
void saber_string_free(char* s);

/* --- scoring --------------------------------------------------------- */

typedef struct saber_baselines saber_baselines;
typedef struct saber_agent_table saber_agent_table;
typedef struct saber_report saber_report;

typedef struct saber_game_baseline {
  char game[64];
  double random_score;
  int has_human_beginner;
  double human_beginner;
  int has_world_record;
  double world_record;
  int extrapolated;
} saber_game_baseline;

int saber_baselines_open(const char* csv_path, saber_baselines** out);
void saber_baselines_free(saber_baselines* b);
size_t saber_baselines_count(const saber_baselines* b);
size_t saber_baselines_records_present(const saber_baselines* b);
int saber_baselines_get(const saber_baselines* b, size_t index, saber_game_baseline* out);
int saber_baselines_find(const saber_baselines* b, const char* game, saber_game_baseline* out);
int saber_beginner_baseline_stats(const saber_baselines* b, double* median, double* mean,
                                  size_t* games_used);

int saber_normalize_record(double agent, double random_score, double record, double* out);
int saber_normalize_reference(double agent, double random_score, double reference, double* out);

/* classes: 0 failing, 1 poor, 2 medium, 3 fair, 4 superhuman */
int saber_classify(double normalized, int* out_class);
const char* saber_score_class_name(int score_class);

typedef enum {
  SABER_TIME_FIVE_MIN = 0,
  SABER_TIME_THIRTY_MIN = 1,
  SABER_TIME_UNLIMITED = 2
} saber_eval_time;

int saber_agent_table_open(const char* csv_path, saber_agent_table** out);
void saber_agent_table_free(saber_agent_table* t);
size_t saber_agent_table_columns(const saber_agent_table* t);
int saber_agent_table_column_name(const saber_agent_table* t, size_t index, char* buf,
                                  size_t cap);

/* Normalize one agent column against the records baseline and aggregate.
 * Games without a record are skipped; infinite gameplay becomes +inf and is
 * capped at mean_cap (fraction, 2.0 = 200%) in the mean only. */
int saber_report_build(const saber_baselines* b, const saber_agent_table* t, const char* column,
                       saber_eval_time time_limit, long train_frames, double mean_cap,
                       saber_report** out);
int saber_report_from_values(const double* normalized, size_t count, double mean_cap,
                             saber_report** out);
void saber_report_free(saber_report* r);
double saber_report_median(const saber_report* r);
double saber_report_mean(const saber_report* r);
int saber_report_superhuman(const saber_report* r);
void saber_report_histogram(const saber_report* r, int counts[5]);
int saber_report_to_json(const saber_report* r, char** out);
int saber_report_write_csv(const saber_report* r, const char* path);
int saber_report_write_histogram_svg(const saber_report* r, const char* path);

/* Checkpoint curve over several reports (CSV + SVG). */
int saber_reports_write_curve(const saber_report* const* reports, size_t count,
                              const char* csv_path, const char* svg_path);

int saber_training_curve_score(const double* episode_scores, size_t count, int window,
                               double* out);

/* Recompute every published statistic from the datasets in data_dir and
 * diff them against expectations.txt. all_pass gets 0/1. */
int saber_verify_tables(const char* data_dir, int as_json, char** report_text, int* all_pass);

/* --- environment ------------------------------------------------------ */

typedef struct saber_env_config {
  double sticky_xi;
  int action_set_size; /* fixed at 18 */
  long max_stuck_frames;
  long max_episode_frames;
  int action_repeat;
  int frame_stack;
  uint64_t seed;
} saber_env_config;

void saber_env_config_defaults(saber_env_config* cfg);

typedef enum {
  SABER_TERM_NONE = 0,
  SABER_TERM_GAME_OVER = 1,
  SABER_TERM_STUCK_TIMEOUT = 2,
  SABER_TERM_WALL_CAP = 3,
  SABER_TERM_INFINITE = 4
} saber_termination;

const char* saber_termination_name(int termination);

typedef struct saber_episode_log {
  double raw_score;
  double clipped_return;
  long frames;
  int termination;
  long rollover_events;
} saber_episode_log;

typedef struct saber_step_result {
  const float* observation; /* frame_stack * 84 * 84 floats, oldest first */
  double clipped_reward;
  double raw_reward;
  int done;
  int termination;
} saber_step_result;

typedef struct saber_env saber_env;

/* game ids: toy:chain toy:lives toy:stuck toy:rollover toy:firestart toy:loop */
int saber_env_create(const char* game_id, const saber_env_config* cfg, saber_env** out);
void saber_env_free(saber_env* env);
int saber_env_reset(saber_env* env);
int saber_env_step(saber_env* env, int action, saber_step_result* out);
int saber_env_observation(const saber_env* env, const float** data, size_t* count);
int saber_env_log(const saber_env* env, saber_episode_log* out);

typedef int (*saber_policy_fn)(const float* observation, int frame_stack, int edge, void* user);
int saber_env_run_episode(saber_env* env, saber_policy_fn policy, void* user,
                          saber_episode_log* out);

int saber_episode_log_json(const saber_episode_log* log, char** out);
int saber_clip_reward(double raw, double* clipped, int* rollover);
int saber_preprocess_frame(const uint8_t* rgb, int height, int width, float* out84x84);
int saber_game_ids(char* buf, size_t cap); /* comma-separated */

/* --- prioritized replay ---------------------------------------------- */

typedef struct saber_replay_config {
  size_t capacity;
  double omega;
  double beta_start;
  double beta_end;
  int n_step;
  double gamma;
  uint64_t seed;
} saber_replay_config;

void saber_replay_config_defaults(saber_replay_config* cfg);

typedef struct saber_transition {
  uint64_t obs_key;
  uint64_t next_obs_key;
  int action;
  double n_step_return;
  double discount_pow_n; /* 0 when a terminal falls within n */
  double priority;       /* producer-supplied; no default-priority path */
} saber_transition;

typedef struct saber_replay saber_replay;
typedef struct saber_batch saber_batch;

int saber_replay_create(const saber_replay_config* cfg, saber_replay** out);
void saber_replay_free(saber_replay* r);
int saber_replay_push(saber_replay* r, const saber_transition* t, const uint8_t* obs,
                      size_t obs_len, const uint8_t* next_obs, size_t next_obs_len,
                      uint32_t* slot_out);
int saber_replay_sample(saber_replay* r, int batch, double beta, saber_batch** out);
int saber_replay_update_priorities(saber_replay* r, const uint32_t* slots,
                                   const uint32_t* versions, const double* priorities,
                                   size_t count, size_t* applied);
size_t saber_replay_size(const saber_replay* r);
int saber_replay_stats_json(const saber_replay* r, char** out);

size_t saber_batch_size(const saber_batch* b);
int saber_batch_transition(const saber_batch* b, size_t index, saber_transition* out);
int saber_batch_slot(const saber_batch* b, size_t index, uint32_t* slot, uint32_t* version);
int saber_batch_is_weight(const saber_batch* b, size_t index, double* out);
int saber_batch_obs(const saber_batch* b, size_t index, const uint8_t** data, size_t* len);
int saber_batch_next_obs(const saber_batch* b, size_t index, const uint8_t** data, size_t* len);
void saber_batch_free(saber_batch* b);

/* --- distributed fabric ------------------------------------------------ */

typedef struct saber_server saber_server;

int saber_serve_replay(const char* bind_address, const saber_replay_config* cfg,
                       saber_server** out);
int saber_server_address(const saber_server* s, char* buf, size_t cap);
int saber_server_stats_json(const saber_server* s, char** out);
void saber_server_stop_free(saber_server* s);

typedef struct saber_actor_options {
  const char* game_id;
  const char* replay_address;
  const char* learner_address;
  saber_env_config env;
  long env_step_budget;
  long transition_budget; /* when > 0: ship exactly this many transitions */
  int put_batch_size;
  int param_refresh_interval;
  int feature_edge;
  int n_step;
  double gamma;
  int n_tau, n_tau_prime, k_action;
  double kappa;
  double epsilon_start, epsilon_end;
  long epsilon_decay_steps;
  uint64_t seed;
} saber_actor_options;

void saber_actor_options_defaults(saber_actor_options* o);

typedef struct saber_actor_stats {
  long env_steps;
  long episodes;
  uint64_t transitions_sent;
  uint64_t acked;
  uint64_t final_param_version;
} saber_actor_stats;

int saber_actor_run(const saber_actor_options* options, saber_actor_stats* out);

typedef struct saber_learner_options {
  const char* replay_address;
  const char* bind_address; /* parameter service, e.g. 127.0.0.1:7788 */
  int feature_dim;          /* flat network input width */
  int batch_size;
  long min_fill;
  long total_steps;
  int target_sync_interval;
  int publish_interval;
  long checkpoint_interval;
  const char* checkpoint_dir; /* NULL: no checkpoint files */
  double lr, adam_eps;
  int n_tau, n_tau_prime, k_action;
  double kappa, gamma;
  double beta_start, beta_end;
  long min_fill_timeout_ms; /* 0: wait forever */
  uint64_t seed;
} saber_learner_options;

void saber_learner_options_defaults(saber_learner_options* o);

typedef struct saber_learner_stats {
  long steps;
  uint64_t published_version;
  double last_loss;
  int timed_out_waiting_for_fill;
} saber_learner_stats;

int saber_learner_run(const saber_learner_options* options, saber_learner_stats* out);

/* --- single-process toy training --------------------------------------- */

typedef struct saber_train_options {
  const char* game_id;
  int chain_length;
  int chain_horizon;
  double chain_exit_reward;
  saber_env_config env;
  saber_replay_config replay;
  long env_step_budget;
  int batch_size;
  long min_fill;
  int lockstep_ratio;
  int target_sync_interval;
  int feature_edge;
  long curve_interval;
  int curve_window;
  double lr, adam_eps;
  int n_tau, n_tau_prime, k_action;
  double kappa;
  double epsilon_start, epsilon_end;
  long epsilon_decay_steps; /* <0: 35% of the budget */
  const char* out_dir;      /* NULL: no files */
  uint64_t seed;
} saber_train_options;

void saber_train_options_defaults(saber_train_options* o);

typedef struct saber_train_result {
  long env_steps;
  long learner_steps;
  long episodes;
  double final_curve_score;
  int curve_ready;
  double final_loss;
  double chain_optimal_return; /* oracle value for toy:chain, else NaN */
} saber_train_result;

int saber_train_toy(const saber_train_options* options, saber_train_result* out);

/* --- checkpoint policies ------------------------------------------------ */

typedef struct saber_net saber_net;

int saber_net_load(const char* checkpoint_path, saber_net** out);
void saber_net_free(saber_net* n);
size_t saber_net_input_size(const saber_net* n);
/* greedy zero-noise action from a stacked 84x84 observation; the observation
 * is downsampled to the network's input shape */
int saber_net_act(saber_net* n, const float* observation, int frame_stack, int* action);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SABER_H */
