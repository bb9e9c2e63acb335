#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "core/error.hpp"
#include "core/figures.hpp"
#include "core/rng.hpp"
#include "core/scoring.hpp"
#include "core/table_check.hpp"

using namespace saber;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const std::string kData = SABER_DATA_DIR;

std::string write_temp(const std::string& name, const std::string& content) {
  auto path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path);
  out << content;
  return path;
}

// Brute-force aggregation oracle: plain sort + index for the median, naive
// accumulation for mean/histogram. Kept independent of aggregate().
struct BruteAggregate {
  double median, mean;
  int superhuman;
};

BruteAggregate brute_aggregate(const std::vector<double>& values, double cap) {
  std::vector<double> sorted = values;
  for (size_t i = 0; i < sorted.size(); ++i)
    for (size_t j = i + 1; j < sorted.size(); ++j)
      if (sorted[j] < sorted[i]) std::swap(sorted[i], sorted[j]);
  BruteAggregate out{};
  size_t n = sorted.size();
  out.median = (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  double sum = 0.0;
  out.superhuman = 0;
  for (double v : values) {
    sum += std::isinf(v) ? cap : v;
    if (v >= 1.0) out.superhuman++;
  }
  out.mean = sum / static_cast<double>(n);
  return out;
}

}  // namespace

TEST_CASE("baseline table loads the shipped dataset with its invariants") {
  auto table = BaselineTable::load(kData + "/baselines.csv");
  CHECK(table.size() == 61);
  CHECK(table.records_present() == 58);
  for (const char* g : {"double dunk", "elevator action", "tennis"}) {
    REQUIRE(table.find(g) != nullptr);
    CHECK_FALSE(table.find(g)->world_record.has_value());
  }

  const GameBaseline* breakout = table.find("breakout");
  REQUIRE(breakout != nullptr);
  CHECK(breakout->random_score == doctest::Approx(1.5));
  CHECK(*breakout->human_beginner == doctest::Approx(30.5));
  CHECK(*breakout->world_record == doctest::Approx(864.0));
  CHECK_FALSE(breakout->extrapolated);

  const GameBaseline* tennis = table.find("tennis");
  CHECK(tennis->random_score == doctest::Approx(-23.92));
  CHECK(*tennis->human_beginner == doctest::Approx(-8.3));

  const GameBaseline* boxing = table.find("boxing");
  CHECK(*boxing->world_record == doctest::Approx(100.0));
  CHECK(boxing->extrapolated);
}

TEST_CASE("baseline loader rejects malformed and duplicate rows") {
  auto bad = write_temp("saber_bad_row.csv", "game,random,human_beginner,world_record\n"
                                             "pong,1.0,2.0\n");
  CHECK_THROWS_AS(BaselineTable::load(bad), Error);
  try {
    BaselineTable::load(bad);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);  // names the line
  }

  auto dup = write_temp("saber_dup.csv", "game,random,human_beginner,world_record\n"
                                         "pong,1.0,2.0,3.0\npong,1.0,2.0,3.0\n");
  CHECK_THROWS_AS(BaselineTable::load(dup), Error);

  auto nonnum = write_temp("saber_nonnum.csv", "game,random,human_beginner,world_record\n"
                                               "pong,abc,2.0,3.0\n");
  CHECK_THROWS_AS(BaselineTable::load(nonnum), Error);
}

TEST_CASE("normalize_record matches hand-computed values") {
  CHECK(normalize_record(1.5, 1.5, 864.0) == 0.0);
  // breakout at 200M: (175.47 - 1.5) / |864 - 1.5|
  CHECK(normalize_record(175.47, 1.5, 864.0) == doctest::Approx(0.2017).epsilon(1e-3));
  // skiing: worse than random, negative scores exercise the absolute value
  CHECK(normalize_record(-28134.23, -16267.91, -3272.0) ==
        doctest::Approx(-0.9131).epsilon(1e-3));
  CHECK_THROWS_AS(normalize_record(1.0, 2.0, 2.0), Error);
}

TEST_CASE("normalize_record endpoints are exact for every game with a record") {
  auto table = BaselineTable::load(kData + "/baselines.csv");
  for (const auto& b : table.rows()) {
    if (!b.world_record) continue;
    CHECK(normalize_record(b.random_score, b.random_score, *b.world_record) == 0.0);
    double at_record = normalize_record(*b.world_record, b.random_score, *b.world_record);
    CHECK(std::abs(at_record) == doctest::Approx(1.0).epsilon(1e-15));
    if (*b.world_record > b.random_score) CHECK(at_record == 1.0);
  }
}

TEST_CASE("normalize_reference matches hand-computed values") {
  CHECK(normalize_reference(2764.55, 136.15, 2764.55) == doctest::Approx(1.0));
  CHECK(normalize_reference(136.15, 136.15, 2764.55) == 0.0);
  // space invaders: the improved agent against the baseline agent reference
  CHECK(normalize_reference(10110.4, 136.15, 2764.55) ==
        doctest::Approx(3.79480).epsilon(1e-4));
  CHECK_THROWS_AS(normalize_reference(1.0, 5.0, 5.0), Error);
}

TEST_CASE("normalization is invariant under common positive affine transforms") {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    double agent = rng.uniform() * 200 - 100;
    double random_score = rng.uniform() * 200 - 100;
    double record = random_score + (rng.uniform() - 0.5) * 300;
    if (record == random_score) continue;
    double scale = rng.uniform() * 5 + 0.1;
    double shift = rng.uniform() * 50 - 25;
    double base = normalize_record(agent, random_score, record);
    double mapped = normalize_record(agent * scale + shift, random_score * scale + shift,
                                     record * scale + shift);
    CHECK(mapped == doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("classify boundaries") {
  CHECK(classify(0.005) == ScoreClass::failing);
  CHECK(classify(0.0099) == ScoreClass::failing);
  CHECK(classify(0.01) == ScoreClass::poor);
  CHECK(classify(0.0999) == ScoreClass::poor);
  CHECK(classify(0.10) == ScoreClass::medium);
  CHECK(classify(0.2017) == ScoreClass::medium);
  CHECK(classify(0.50) == ScoreClass::fair);
  CHECK(classify(0.999) == ScoreClass::fair);
  CHECK(classify(1.0) == ScoreClass::superhuman);  // ties broken upward
  CHECK(classify(kInf) == ScoreClass::superhuman);
  CHECK(classify(-0.5) == ScoreClass::failing);

  // monotone non-decreasing
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    double a = rng.uniform() * 3 - 0.5;
    double b = a + rng.uniform();
    CHECK(static_cast<int>(classify(a)) <= static_cast<int>(classify(b)));
  }
}

TEST_CASE("aggregate hand case: {0.005, 0.20, +inf}") {
  std::vector<NormalizedScore> scores = {
      {"a", 0.005, BaselineKind::world_record},
      {"b", 0.20, BaselineKind::world_record},
      {"c", kInf, BaselineKind::world_record},
  };
  auto r = aggregate(scores, 2.0);
  CHECK(r.median == doctest::Approx(0.20));
  CHECK(r.mean == doctest::Approx((0.005 + 0.20 + 2.0) / 3.0));
  CHECK(r.superhuman_count == 1);
  CHECK(r.histogram[static_cast<size_t>(ScoreClass::failing)] == 1);
  CHECK(r.histogram[static_cast<size_t>(ScoreClass::medium)] == 1);
  CHECK(r.histogram[static_cast<size_t>(ScoreClass::superhuman)] == 1);

  int total = 0;
  for (int c : r.histogram) total += c;
  CHECK(total == 3);
  CHECK_THROWS_AS(aggregate({}, 2.0), Error);
}

TEST_CASE("aggregate of a constant list") {
  std::vector<NormalizedScore> scores(7, NormalizedScore{"g", 1.0, BaselineKind::world_record});
  for (size_t i = 0; i < scores.size(); ++i) scores[i].game_id = "g" + std::to_string(i);
  auto r = aggregate(scores);
  CHECK(r.median == 1.0);
  CHECK(r.mean == 1.0);
  CHECK(r.superhuman_count == 7);
}

TEST_CASE("aggregate agrees with the brute-force oracle on random tables") {
  Rng rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    size_t n = 1 + rng.below(100);
    std::vector<NormalizedScore> scores;
    std::vector<double> values;
    for (size_t i = 0; i < n; ++i) {
      double v = rng.bernoulli(0.1) ? kInf : rng.uniform() * 4.0 - 1.0;
      scores.push_back({"g" + std::to_string(i), v, BaselineKind::world_record});
      values.push_back(v);
    }
    double cap = 1.0 + rng.uniform() * 3.0;
    auto r = aggregate(scores, cap);
    auto oracle = brute_aggregate(values, cap);
    if (std::isinf(oracle.median))
      CHECK(std::isinf(r.median));
    else
      CHECK(r.median == doctest::Approx(oracle.median).epsilon(1e-12));
    CHECK(r.mean == doctest::Approx(oracle.mean).epsilon(1e-12));
    CHECK(r.superhuman_count == oracle.superhuman);
  }
}

TEST_CASE("median ignores the mean cap; mean is monotone in the cap") {
  std::vector<NormalizedScore> scores = {
      {"a", 0.1, BaselineKind::world_record},
      {"b", 0.9, BaselineKind::world_record},
      {"c", kInf, BaselineKind::world_record},
  };
  auto r1 = aggregate(scores, 2.0);
  auto r2 = aggregate(scores, 50.0);
  CHECK(r1.median == r2.median);
  CHECK(r1.mean < r2.mean);

  // removing an infinite entry never increases the superhuman count
  auto smaller = scores;
  smaller.pop_back();
  CHECK(aggregate(smaller).superhuman_count <= r1.superhuman_count);
}

TEST_CASE("training_curve_score") {
  std::vector<double> hundred(100, 5.0);
  CHECK(training_curve_score(hundred) == doctest::Approx(5.0));

  std::vector<double> mixed(50, 99.0);
  mixed.insert(mixed.end(), 100, 2.0);
  CHECK(training_curve_score(mixed) == doctest::Approx(2.0));

  std::vector<double> ramp;
  for (int i = 1; i <= 100; ++i) ramp.push_back(i);
  CHECK(training_curve_score(ramp) == doctest::Approx(50.5));

  std::vector<double> short_list(99, 1.0);
  CHECK_THROWS_AS(training_curve_score(short_list), Error);
}

TEST_CASE("beginner baseline statistics reproduce the published magnitudes") {
  auto table = BaselineTable::load(kData + "/baselines.csv");
  auto stats = beginner_baseline_stats(table);
  CHECK(stats.games_used.size() == 54);
  CHECK(stats.games_skipped.size() == 7);
  CHECK(stats.median == doctest::Approx(44.0).epsilon(0.10));
  CHECK(stats.mean == doctest::Approx(993.0).epsilon(0.10));

  // independent recomputation with plain loops
  std::vector<double> values;
  for (const auto& b : table.rows()) {
    if (!b.human_beginner || !b.world_record) continue;
    values.push_back((*b.world_record - b.random_score) / (*b.human_beginner - b.random_score));
  }
  auto oracle = brute_aggregate(values, 0.0);
  CHECK(stats.median == doctest::Approx(oracle.median).epsilon(1e-12));
  CHECK(stats.mean == doctest::Approx(oracle.mean).epsilon(1e-12));

  // degenerate synthetic table: record equals beginner
  auto tiny = BaselineTable::from_rows({GameBaseline{"only", 0.0, 5.0, 5.0, false}});
  auto tiny_stats = beginner_baseline_stats(tiny);
  CHECK(tiny_stats.median == doctest::Approx(1.0));
  CHECK(tiny_stats.mean == doctest::Approx(1.0));
}

TEST_CASE("verify_published") {
  EvaluationReport r;
  r.median = 0.02814;  // rounds to printed 0.0281
  r.mean = 0.2027;
  r.superhuman_count = 1;
  r.per_game = {{"x", 0.1, BaselineKind::world_record}};

  auto diffs = verify_published(r, PublishedStats{0.0281, 0.2018, 1});
  REQUIRE(diffs.size() == 3);
  CHECK(diffs[0].pass);  // median matches at printed precision
  CHECK(diffs[1].pass);  // mean within 1pp
  CHECK(diffs[2].pass);

  auto vs_self = verify_published(r, PublishedStats{0.0281, 0.2027, 1});
  for (const auto& d : vs_self) CHECK(d.abs_dev <= 0.00005);

  auto fail = verify_published(r, PublishedStats{0.05, 0.2018, 1});
  CHECK_FALSE(fail[0].pass);
}

TEST_CASE("verify_tables reproduces every published statistic") {
  auto result = verify_tables(kData);
  for (const auto& l : result.lines) {
    INFO(l.name, " expected ", l.expected, " actual ", l.actual);
    CHECK(l.pass);
  }
  CHECK(result.all_pass);
  CHECK(result.subset_note.find("54 games") != std::string::npos);
}

TEST_CASE("verify_tables flags a perturbed dataset naming the game") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "saber_perturbed";
  fs::create_directories(dir);
  for (const auto& f : fs::directory_iterator(kData))
    fs::copy_file(f.path(), dir / f.path().filename(), fs::copy_options::overwrite_existing);
  {
    std::ifstream in(dir / "scores_200m_by_time.csv");
    std::string text((std::istreambuf_iterator<char>(in)), {});
    auto pos = text.find("breakout,173.01");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 15, "breakout,1730.1");
    std::ofstream out(dir / "scores_200m_by_time.csv");
    out << text;
  }
  auto result = verify_tables(dir.string());
  CHECK_FALSE(result.all_pass);

  // the per-game diff surfaces through the normalized report
  auto baselines = BaselineTable::load((dir / "baselines.csv").string());
  auto table = AgentTable::load((dir / "scores_200m_by_time.csv").string());
  auto scores = table.extract("rainbow_5min", EvalTimeLimit::five_min, 200'000'000);
  auto report = aggregate(normalize_scores(scores, baselines));
  bool found = false;
  for (const auto& g : report.per_game)
    if (g.game_id == "breakout" && g.value > 1.0) found = true;
  CHECK(found);
}

TEST_CASE("verify_tables raises on a missing dataset") {
  CHECK_THROWS_AS(verify_tables("/nonexistent-dir"), Error);
}

TEST_CASE("agent table rejects infinite gameplay under finite time limits") {
  auto table = AgentTable::load(kData + "/riqn_saber_frames.csv");
  CHECK_THROWS_AS(table.extract("200M", EvalTimeLimit::thirty_min, 0), Error);
  auto scores = table.extract("200M", EvalTimeLimit::unlimited, 200'000'000);
  CHECK(scores.size() == 61);
  int infinite = 0;
  for (const auto& s : scores) infinite += s.infinite_gameplay ? 1 : 0;
  CHECK(infinite == 3);  // asteroids, atlantis, defender

  // std-dev suffix parsing
  for (const auto& s : scores)
    if (s.game_id == "centipede") {
      REQUIRE(s.std_dev.has_value());
      CHECK(*s.std_dev == doctest::Approx(920.10));
      CHECK(s.raw_score == doctest::Approx(5260.96));
    }
}

TEST_CASE("figure emission is deterministic and validates inputs") {
  namespace fs = std::filesystem;
  auto baselines = BaselineTable::load(kData + "/baselines.csv");
  auto table = AgentTable::load(kData + "/scores_200m_by_time.csv");
  auto report = aggregate(
      normalize_scores(table.extract("riqn_unlimited", EvalTimeLimit::unlimited, 200'000'000),
                       baselines),
      2.0, 200'000'000);

  auto dir = fs::temp_directory_path() / "saber_figs";
  fs::create_directories(dir);
  auto csv1 = (dir / "scores1.csv").string();
  auto csv2 = (dir / "scores2.csv").string();
  write_report_csv(report, csv1);
  write_report_csv(report, csv2);

  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), {});
  };
  CHECK(slurp(csv1) == slurp(csv2));

  // header + one row per scored game
  std::string text = slurp(csv1);
  size_t lines = 0;
  for (char c : text) lines += c == '\n';
  CHECK(lines == 59);  // 58 games + header

  write_histogram_svg(report, (dir / "hist.svg").string());
  CHECK(slurp((dir / "hist.svg").string()).rfind("<svg", 0) == 0);

  std::vector<EvaluationReport> two = {report, report};
  two[0].checkpoint_frames = 10'000'000;
  two[1].checkpoint_frames = 50'000'000;
  write_curve_csv(two, (dir / "curve.csv").string());
  write_curve_svg(two, (dir / "curve.svg").string());
  std::string curve = slurp((dir / "curve.csv").string());
  CHECK(curve.find("10000000") != std::string::npos);
  CHECK(curve.find("50000000") != std::string::npos);

  EvaluationReport empty;
  CHECK_THROWS_AS(write_report_csv(empty, (dir / "x.csv").string()), Error);
}

TEST_CASE("report json serialization") {
  EvaluationReport r;
  r.checkpoint_frames = 200'000'000;
  r.median = 0.0313;
  r.mean = 0.3089;
  r.superhuman_count = 4;
  r.histogram[4] = 4;
  r.per_game = {{"atlantis", kInf, BaselineKind::world_record},
                {"breakout", 0.2017, BaselineKind::world_record}};
  auto j = report_to_json(r);
  CHECK(j.find("\"median\": 0.0313") != std::string::npos);
  CHECK(j.find("\"infinite\"") != std::string::npos);
  CHECK(j.find("superhuman") != std::string::npos);
}
