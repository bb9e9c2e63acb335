#include "core/table_check.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "core/error.hpp"
#include "core/kv.hpp"

namespace saber {

namespace {

// Printed precision of the published tables: 2 decimals of percent.
constexpr double kPrintedTol = 0.00005 + 1e-12;

double round_printed(double fraction) { return std::round(fraction * 1e4) / 1e4; }

void add_line(TableCheckResult& r, const std::string& name, double expected, double actual,
              double tol, const std::string& note = "") {
  CheckLine l;
  l.name = name;
  l.expected = expected;
  l.actual = actual;
  l.tolerance = tol;
  l.pass = std::abs(actual - expected) <= tol;
  l.note = note;
  r.all_pass = r.all_pass && l.pass;
  r.lines.push_back(std::move(l));
}

struct TimeColumn {
  const char* column;
  const char* key;  // expectations key segment
  EvalTimeLimit limit;
};

}  // namespace

DatasetPaths DatasetPaths::in_dir(const std::string& data_dir) {
  DatasetPaths p;
  p.baselines = data_dir + "/baselines.csv";
  p.by_time = data_dir + "/scores_200m_by_time.csv";
  p.riqn_unlimited = data_dir + "/riqn_saber_frames.csv";
  p.riqn_five_min = data_dir + "/riqn_5min_frames.csv";
  p.riqn_thirty_min = data_dir + "/riqn_30min_frames.csv";
  p.expectations = data_dir + "/expectations.txt";
  return p;
}

TableCheckResult verify_tables(const std::string& data_dir) {
  const DatasetPaths paths = DatasetPaths::in_dir(data_dir);
  const BaselineTable baselines = BaselineTable::load(paths.baselines);
  const KvFile expect = KvFile::parse_file(paths.expectations);
  const AgentTable by_time = AgentTable::load(paths.by_time);

  TableCheckResult result;

  // 200M-frame summary statistics per agent and evaluation time.
  static const TimeColumn kTimes[] = {
      {"5min", "five_min", EvalTimeLimit::five_min},
      {"30min", "thirty_min", EvalTimeLimit::thirty_min},
      {"unlimited", "unlimited", EvalTimeLimit::unlimited},
  };
  for (const char* agent : {"rainbow", "riqn"}) {
    for (const auto& t : kTimes) {
      const std::string column = std::string(agent) + "_" + t.column;
      auto scores = by_time.extract(column, t.limit, 200'000'000);
      auto report = aggregate(normalize_scores(scores, baselines), 2.0, 200'000'000);
      const std::string key = std::string("table3.") + agent + "." + t.key;
      add_line(result, key + ".median", expect.get_double(key + ".median"),
               round_printed(report.median), 0.0005);
      add_line(result, key + ".mean", expect.get_double(key + ".mean"),
               round_printed(report.mean), 0.010);
      add_line(result, key + ".superhuman",
               static_cast<double>(expect.get_long(key + ".superhuman")),
               report.superhuman_count, 0.0);
    }
  }

  // The re-evaluated column of the Rainbow comparison table equals the
  // 30-minute Rainbow block; checked against its own expectation keys.
  {
    auto scores = by_time.extract("rainbow_30min", EvalTimeLimit::thirty_min, 200'000'000);
    auto report = aggregate(normalize_scores(scores, baselines), 2.0, 200'000'000);
    add_line(result, "table2.rainbow.machado.median",
             expect.get_double("table2.rainbow.machado.median"), round_printed(report.median),
             0.0005);
    add_line(result, "table2.rainbow.machado.mean",
             expect.get_double("table2.rainbow.machado.mean"), round_printed(report.mean), 0.010);
    add_line(result, "table2.rainbow.machado.superhuman",
             static_cast<double>(expect.get_long("table2.rainbow.machado.superhuman")),
             report.superhuman_count, 0.0);
  }

  // World records measured with the beginner-human normalization.
  {
    auto stats = beginner_baseline_stats(baselines);
    double exp_median = expect.get_double("records_vs_beginner.median");
    double exp_mean = expect.get_double("records_vs_beginner.mean");
    add_line(result, "records_vs_beginner.median", exp_median, stats.median,
             0.10 * exp_median, "tolerance 10% relative");
    add_line(result, "records_vs_beginner.mean", exp_mean, stats.mean, 0.10 * exp_mean,
             "tolerance 10% relative");
    std::ostringstream note;
    note << stats.games_used.size() << " games with both baselines; skipped:";
    for (const auto& g : stats.games_skipped) note << ' ' << g;
    result.subset_note = note.str();
  }

  // Checkpoint median curves, frozen at printed precision + monotonicity.
  struct CurveTable {
    const std::string* path;
    const char* key;
    EvalTimeLimit limit;
  };
  const CurveTable kCurves[] = {
      {&paths.riqn_five_min, "five_min", EvalTimeLimit::five_min},
      {&paths.riqn_thirty_min, "thirty_min", EvalTimeLimit::thirty_min},
      {&paths.riqn_unlimited, "unlimited", EvalTimeLimit::unlimited},
  };
  for (const auto& c : kCurves) {
    const AgentTable table = AgentTable::load(*c.path);
    double prev = -1.0;
    bool monotone = true;
    for (const char* cp : {"10M", "50M", "100M", "200M"}) {
      auto scores = table.extract(cp, c.limit, 0);
      auto report = aggregate(normalize_scores(scores, baselines));
      const std::string key = std::string("curve.riqn.") + c.key + "." + cp + ".median";
      add_line(result, key, expect.get_double(key), round_printed(report.median), kPrintedTol);
      monotone = monotone && report.median >= prev;
      prev = report.median;
    }
    add_line(result, std::string("curve.riqn.") + c.key + ".monotone", 1.0, monotone ? 1.0 : 0.0,
             0.0, "medians non-decreasing across checkpoints");
  }

  return result;
}

std::string table_check_text(const TableCheckResult& r) {
  std::string out;
  char buf[256];
  for (const auto& l : r.lines) {
    std::snprintf(buf, sizeof(buf), "%-42s expected %-10.6g actual %-10.6g dev %-9.3g %s%s%s\n",
                  l.name.c_str(), l.expected, l.actual, std::abs(l.actual - l.expected),
                  l.pass ? "PASS" : "FAIL", l.note.empty() ? "" : "  # ", l.note.c_str());
    out += buf;
  }
  out += "subset: " + r.subset_note + "\n";
  out += r.all_pass ? "ALL CHECKS PASSED\n" : "CHECKS FAILED\n";
  return out;
}

std::string table_check_json(const TableCheckResult& r) {
  nlohmann::ordered_json j;
  j["all_pass"] = r.all_pass;
  j["subset"] = r.subset_note;
  nlohmann::ordered_json lines = nlohmann::ordered_json::array();
  for (const auto& l : r.lines) {
    nlohmann::ordered_json e;
    e["name"] = l.name;
    e["expected"] = l.expected;
    e["actual"] = l.actual;
    e["deviation"] = std::abs(l.actual - l.expected);
    e["tolerance"] = l.tolerance;
    e["pass"] = l.pass;
    if (!l.note.empty()) e["note"] = l.note;
    lines.push_back(e);
  }
  j["checks"] = lines;
  return j.dump(2);
}

}  // namespace saber
