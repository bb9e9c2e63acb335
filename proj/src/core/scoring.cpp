#include "core/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "core/error.hpp"
#include "core/kv.hpp"

namespace saber {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::io, "cannot open dataset " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#') continue;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) raise(ErrorCode::parse, path + ": empty dataset");
  return rows;
}

double parse_number(const std::string& s, const std::string& where) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    raise(ErrorCode::parse, where + ": `" + s + "` is not a number");
  return v;
}

// Agent cell grammar: `NA` | `Infinite gameplay` | number [ `(` std `)` ].
AgentCell parse_agent_cell(const std::string& raw, const std::string& where) {
  AgentCell cell;
  std::string s = trim(raw);
  std::string lower = s;
  std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
  if (lower.rfind("infinite", 0) == 0) {
    cell.infinite_gameplay = true;
    return cell;
  }
  size_t paren = s.find('(');
  if (paren != std::string::npos) {
    size_t close = s.find(')', paren);
    if (close == std::string::npos) raise(ErrorCode::parse, where + ": unbalanced `(`");
    cell.std_dev = parse_number(trim(s.substr(paren + 1, close - paren - 1)), where);
    s = trim(s.substr(0, paren));
  }
  cell.raw_score = parse_number(s, where);
  return cell;
}

}  // namespace

const char* to_string(EvalTimeLimit t) {
  switch (t) {
    case EvalTimeLimit::five_min: return "five_min";
    case EvalTimeLimit::thirty_min: return "thirty_min";
    case EvalTimeLimit::unlimited: return "unlimited";
  }
  return "?";
}

const char* to_string(ScoreClass c) {
  switch (c) {
    case ScoreClass::failing: return "failing";
    case ScoreClass::poor: return "poor";
    case ScoreClass::medium: return "medium";
    case ScoreClass::fair: return "fair";
    case ScoreClass::superhuman: return "superhuman";
  }
  return "?";
}

BaselineTable BaselineTable::load(const std::string& path) {
  auto rows = read_csv(path);
  size_t start = 0;
  if (!rows[0].empty() && rows[0][0] == "game") start = 1;  // header
  std::vector<GameBaseline> out;
  for (size_t i = start; i < rows.size(); ++i) {
    const auto& cells = rows[i];
    const std::string where = path + ":" + std::to_string(i + 1);
    if (cells.size() != 4)
      raise(ErrorCode::parse, where + ": expected 4 columns, got " + std::to_string(cells.size()));
    GameBaseline b;
    b.game_id = cells[0];
    if (b.game_id.empty()) raise(ErrorCode::parse, where + ": empty game id");
    b.random_score = parse_number(cells[1], where);
    if (cells[2] != "NA") b.human_beginner = parse_number(cells[2], where);
    if (cells[3] != "NA") {
      std::string rec = cells[3];
      if (!rec.empty() && rec.back() == '*') {
        b.extrapolated = true;
        rec = trim(rec.substr(0, rec.size() - 1));
      }
      b.world_record = parse_number(rec, where);
    }
    out.push_back(std::move(b));
  }
  return from_rows(std::move(out));
}

BaselineTable BaselineTable::from_rows(std::vector<GameBaseline> rows) {
  BaselineTable t;
  t.rows_ = std::move(rows);
  t.validate();
  return t;
}

void BaselineTable::validate() const {
  std::set<std::string> seen;
  for (const auto& b : rows_) {
    if (!seen.insert(b.game_id).second)
      raise(ErrorCode::validation, "duplicate game id `" + b.game_id + "`");
    if (b.world_record && *b.world_record == b.random_score)
      raise(ErrorCode::validation,
            "game `" + b.game_id + "`: world record equals random score (zero denominator)");
  }
}

const GameBaseline* BaselineTable::find(const std::string& game_id) const {
  for (const auto& b : rows_)
    if (b.game_id == game_id) return &b;
  return nullptr;
}

size_t BaselineTable::records_present() const {
  size_t n = 0;
  for (const auto& b : rows_)
    if (b.world_record) ++n;
  return n;
}

AgentTable AgentTable::load(const std::string& path) {
  auto rows = read_csv(path);
  if (rows[0].empty() || rows[0][0] != "game")
    raise(ErrorCode::parse, path + ": missing `game,...` header");
  AgentTable t;
  t.columns.assign(rows[0].begin() + 1, rows[0].end());
  std::set<std::string> seen;
  for (size_t i = 1; i < rows.size(); ++i) {
    const auto& cells = rows[i];
    const std::string where = path + ":" + std::to_string(i + 1);
    if (cells.size() != rows[0].size())
      raise(ErrorCode::parse, where + ": expected " + std::to_string(rows[0].size()) +
                                  " columns, got " + std::to_string(cells.size()));
    if (!seen.insert(cells[0]).second)
      raise(ErrorCode::validation, where + ": duplicate game id `" + cells[0] + "`");
    std::vector<AgentCell> parsed;
    for (size_t c = 1; c < cells.size(); ++c)
      parsed.push_back(parse_agent_cell(cells[c], where));
    t.rows.emplace_back(cells[0], std::move(parsed));
  }
  return t;
}

int AgentTable::column_index(const std::string& name) const {
  for (size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<AgentScore> AgentTable::extract(const std::string& column, EvalTimeLimit limit,
                                            long train_frames) const {
  int idx = column_index(column);
  if (idx < 0) raise(ErrorCode::validation, "no column `" + column + "` in agent table");
  std::vector<AgentScore> out;
  for (const auto& [game, cells] : rows) {
    const AgentCell& c = cells[idx];
    if (c.infinite_gameplay && limit != EvalTimeLimit::unlimited)
      raise(ErrorCode::validation,
            "game `" + game + "`: infinite gameplay under a finite time limit");
    AgentScore s;
    s.game_id = game;
    s.raw_score = c.raw_score;
    s.infinite_gameplay = c.infinite_gameplay;
    s.eval_time_limit = limit;
    s.train_frames = train_frames;
    s.std_dev = c.std_dev;
    out.push_back(std::move(s));
  }
  return out;
}

double normalize_record(double agent, double random_score, double record) {
  if (record == random_score)
    raise(ErrorCode::validation, "record equals random score: zero denominator");
  return (agent - random_score) / std::abs(record - random_score);
}

double normalize_reference(double agent, double random_score, double reference) {
  if (reference == random_score)
    raise(ErrorCode::validation, "reference equals random score: zero denominator");
  return (agent - random_score) / std::abs(reference - random_score);
}

std::vector<NormalizedScore> normalize_scores(const std::vector<AgentScore>& agent,
                                              const BaselineTable& baselines) {
  std::vector<NormalizedScore> out;
  for (const auto& a : agent) {
    const GameBaseline* b = baselines.find(a.game_id);
    if (!b) raise(ErrorCode::validation, "no baseline for game `" + a.game_id + "`");
    if (!b->world_record) continue;
    NormalizedScore n;
    n.game_id = a.game_id;
    n.baseline_kind = BaselineKind::world_record;
    n.value = a.infinite_gameplay
                  ? kInf
                  : normalize_record(a.raw_score, b->random_score, *b->world_record);
    out.push_back(std::move(n));
  }
  return out;
}

ScoreClass classify(double s) {
  if (s < 0.01) return ScoreClass::failing;
  if (s < 0.10) return ScoreClass::poor;
  if (s < 0.50) return ScoreClass::medium;
  if (s < 1.00) return ScoreClass::fair;
  return ScoreClass::superhuman;  // >= 100%, ties broken upward; includes +inf
}

double median_of(std::vector<double> values) {
  if (values.empty()) raise(ErrorCode::invalid_argument, "median of empty list");
  std::sort(values.begin(), values.end());  // +inf sorts last
  size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

EvaluationReport aggregate(const std::vector<NormalizedScore>& scores, double mean_cap,
                           long checkpoint_frames) {
  if (scores.empty()) raise(ErrorCode::invalid_argument, "aggregate over empty score list");
  EvaluationReport r;
  r.checkpoint_frames = checkpoint_frames;
  r.per_game = scores;
  std::vector<double> values;
  double sum = 0.0;
  for (const auto& s : scores) {
    values.push_back(s.value);
    sum += std::isinf(s.value) ? mean_cap : s.value;
    ScoreClass c = classify(s.value);
    r.histogram[static_cast<size_t>(c)] += 1;
  }
  r.median = median_of(std::move(values));
  r.mean = sum / static_cast<double>(scores.size());
  r.superhuman_count = r.histogram[static_cast<size_t>(ScoreClass::superhuman)];
  return r;
}

double training_curve_score(const std::vector<double>& episode_scores, int k) {
  if (k < 1) raise(ErrorCode::invalid_argument, "window k must be >= 1");
  if (episode_scores.size() < static_cast<size_t>(k))
    raise(ErrorCode::invalid_argument,
          "need at least " + std::to_string(k) + " episodes, have " +
              std::to_string(episode_scores.size()));
  double sum = 0.0;
  for (size_t i = episode_scores.size() - k; i < episode_scores.size(); ++i)
    sum += episode_scores[i];
  return sum / static_cast<double>(k);
}

BeginnerBaselineStats beginner_baseline_stats(const BaselineTable& table) {
  BeginnerBaselineStats out;
  std::vector<double> values;
  for (const auto& b : table.rows()) {
    if (!b.human_beginner || !b.world_record) {
      out.games_skipped.push_back(b.game_id);
      continue;
    }
    double denom = *b.human_beginner - b.random_score;
    if (denom == 0.0) {
      out.games_skipped.push_back(b.game_id);
      continue;
    }
    values.push_back((*b.world_record - b.random_score) / denom);
    out.games_used.push_back(b.game_id);
  }
  if (values.empty()) raise(ErrorCode::validation, "no game carries both baselines");
  out.median = median_of(values);
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  return out;
}

namespace {
// Published statistics carry 2 decimals of percent.
double round_printed(double fraction) { return std::round(fraction * 1e4) / 1e4; }
}  // namespace

std::vector<FieldDiff> verify_published(const EvaluationReport& report,
                                        const PublishedStats& expected,
                                        const VerifyTolerances& tol) {
  std::vector<FieldDiff> out;
  auto add = [&](const std::string& field, double exp, double act, double t) {
    FieldDiff d;
    d.field = field;
    d.expected = exp;
    d.actual = act;
    d.abs_dev = std::abs(act - exp);
    d.tolerance = t;
    d.pass = d.abs_dev <= t;
    out.push_back(std::move(d));
  };
  add("median", expected.median, round_printed(report.median), tol.median_abs);
  add("mean", expected.mean, round_printed(report.mean), tol.mean_abs);
  add("superhuman", expected.superhuman, report.superhuman_count, 0.0);
  return out;
}

std::string report_to_json(const EvaluationReport& report) {
  nlohmann::ordered_json j;
  j["checkpoint_frames"] = report.checkpoint_frames;
  j["median"] = report.median;
  j["mean"] = report.mean;
  j["superhuman_count"] = report.superhuman_count;
  nlohmann::ordered_json hist;
  for (size_t i = 0; i < report.histogram.size(); ++i)
    hist[to_string(static_cast<ScoreClass>(i))] = report.histogram[i];
  j["histogram"] = hist;
  nlohmann::ordered_json games = nlohmann::ordered_json::array();
  for (const auto& g : report.per_game) {
    nlohmann::ordered_json e;
    e["game"] = g.game_id;
    if (std::isinf(g.value))
      e["normalized"] = "infinite";
    else
      e["normalized"] = g.value;
    e["class"] = to_string(classify(g.value));
    games.push_back(e);
  }
  j["per_game"] = games;
  return j.dump(2);
}

}  // namespace saber
