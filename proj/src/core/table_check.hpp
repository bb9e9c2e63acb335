#pragma once

#include <string>
#include <vector>

#include "core/scoring.hpp"

namespace saber {

// Regression gate over the shipped datasets: recomputes the published summary
// statistics (per-agent medians/means/superhuman counts at the three
// evaluation times, the records-vs-beginner baseline statistics and the
// checkpoint median curves) and diffs them against data/expectations.txt.

struct CheckLine {
  std::string name;
  double expected = 0.0;
  double actual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string note;
};

struct TableCheckResult {
  std::vector<CheckLine> lines;
  bool all_pass = true;
  std::string subset_note;  // which games entered the beginner statistics
};

TableCheckResult verify_tables(const std::string& data_dir);

std::string table_check_text(const TableCheckResult& r);
std::string table_check_json(const TableCheckResult& r);

// Dataset file names within a data directory.
struct DatasetPaths {
  std::string baselines;
  std::string by_time;          // 200M scores at 5min/30min/unlimited
  std::string riqn_unlimited;   // checkpoint table, unlimited eval
  std::string riqn_five_min;    // checkpoint table, 5 min eval
  std::string riqn_thirty_min;  // checkpoint table, 30 min eval
  std::string expectations;
  static DatasetPaths in_dir(const std::string& data_dir);
};

}  // namespace saber
