#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace saber {

// ---------------------------------------------------------------------------
// Score normalization against the world-record / beginner-human baselines and
// SABER report aggregation. Everything here is a pure function over immutable
// tables and safe to call concurrently.
// ---------------------------------------------------------------------------

struct GameBaseline {
  std::string game_id;  // canonical lower-case name
  double random_score = 0.0;
  std::optional<double> human_beginner;
  std::optional<double> world_record;
  bool extrapolated = false;  // trailing `*` on the record cell
};

class BaselineTable {
 public:
  static BaselineTable load(const std::string& path);
  static BaselineTable from_rows(std::vector<GameBaseline> rows);

  const std::vector<GameBaseline>& rows() const { return rows_; }
  const GameBaseline* find(const std::string& game_id) const;
  size_t size() const { return rows_.size(); }
  size_t records_present() const;

 private:
  void validate() const;
  std::vector<GameBaseline> rows_;
};

enum class EvalTimeLimit { five_min, thirty_min, unlimited };

const char* to_string(EvalTimeLimit t);

// One raw agent score cell. Infinite gameplay is only legal for unlimited
// evaluation time.
struct AgentScore {
  std::string game_id;
  double raw_score = 0.0;
  bool infinite_gameplay = false;
  EvalTimeLimit eval_time_limit = EvalTimeLimit::unlimited;
  long train_frames = 0;
  std::optional<double> std_dev;  // present for the 5-seed games
};

// A multi-column agent score table (column per checkpoint or eval time).
struct AgentCell {
  double raw_score = 0.0;
  bool infinite_gameplay = false;
  std::optional<double> std_dev;
};

struct AgentTable {
  std::vector<std::string> columns;  // column names after the game column
  std::vector<std::pair<std::string, std::vector<AgentCell>>> rows;

  static AgentTable load(const std::string& path);
  int column_index(const std::string& name) const;  // -1 if absent
  std::vector<AgentScore> extract(const std::string& column, EvalTimeLimit limit,
                                  long train_frames) const;
};

enum class BaselineKind { world_record, beginner_human, rainbow_reference };

struct NormalizedScore {
  std::string game_id;
  double value = 0.0;  // fraction, 1.0 == 100%; +inf marks infinite gameplay
  BaselineKind baseline_kind = BaselineKind::world_record;
};

enum class ScoreClass { failing = 0, poor = 1, medium = 2, fair = 3, superhuman = 4 };

const char* to_string(ScoreClass c);

struct EvaluationReport {
  long checkpoint_frames = 0;
  double median = 0.0;
  double mean = 0.0;
  int superhuman_count = 0;
  std::array<int, 5> histogram = {};  // indexed by ScoreClass
  std::vector<NormalizedScore> per_game;
};

// (agent - random) / |record - random|; record must differ from random.
double normalize_record(double agent, double random_score, double record);
// Same formula with an agent reference score in place of the record.
double normalize_reference(double agent, double random_score, double reference);

// Normalize one agent column against the record baseline. Games without a
// record are skipped; infinite gameplay maps to +inf.
std::vector<NormalizedScore> normalize_scores(const std::vector<AgentScore>& agent,
                                              const BaselineTable& baselines);

ScoreClass classify(double normalized);

// Median over raw values (+inf sorts last, even length averages the middle
// two); mean replaces each +inf by mean_cap and leaves finite values uncapped.
EvaluationReport aggregate(const std::vector<NormalizedScore>& scores,
                           double mean_cap = 2.0, long checkpoint_frames = 0);

// Mean of the last k episode scores. Fewer than k episodes is an error; no
// partial-window fallback.
double training_curve_score(const std::vector<double>& episode_scores, int k = 100);

struct BeginnerBaselineStats {
  double median = 0.0;
  double mean = 0.0;
  std::vector<std::string> games_used;
  std::vector<std::string> games_skipped;  // missing either baseline
};

// (record - random) / (beginner - random) per game carrying both baselines.
BeginnerBaselineStats beginner_baseline_stats(const BaselineTable& table);

struct PublishedStats {
  double median = 0.0;
  double mean = 0.0;
  int superhuman = 0;
};

struct VerifyTolerances {
  double median_abs = 0.0005;  // fractions: 0.05 percentage points
  double mean_abs = 0.010;     // 1.0 percentage points
};

struct FieldDiff {
  std::string field;
  double expected = 0.0;
  double actual = 0.0;
  double abs_dev = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// Per-field deviations of a report against published statistics. Actual
// values are rounded to the published precision (2 decimals of percent)
// before the tolerance check.
std::vector<FieldDiff> verify_published(const EvaluationReport& report,
                                        const PublishedStats& expected,
                                        const VerifyTolerances& tol = {});

double median_of(std::vector<double> values);

std::string report_to_json(const EvaluationReport& report);

}  // namespace saber
