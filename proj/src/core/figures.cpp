#include "core/figures.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "core/error.hpp"

namespace saber {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::io, "cannot write " + path);
  return out;
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void require_games(const EvaluationReport& report) {
  if (report.per_game.empty())
    raise(ErrorCode::invalid_argument, "report has no per-game scores");
}

}  // namespace

void write_report_csv(const EvaluationReport& report, const std::string& path) {
  require_games(report);
  auto out = open_out(path);
  out << "game,normalized,class\n";
  for (const auto& g : report.per_game)
    out << g.game_id << ',' << fmt(g.value) << ',' << to_string(classify(g.value)) << '\n';
}

void write_histogram_svg(const EvaluationReport& report, const std::string& path) {
  require_games(report);
  auto out = open_out(path);
  constexpr int kWidth = 480, kHeight = 300, kBarW = 72, kGap = 20, kBase = 250;
  int max_count = 1;
  for (int c : report.histogram) max_count = std::max(max_count, c);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\">\n";
  out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  static const char* kColors[5] = {"#b2182b", "#ef8a62", "#fddbc7", "#67a9cf", "#2166ac"};
  for (size_t i = 0; i < report.histogram.size(); ++i) {
    int count = report.histogram[i];
    int h = static_cast<int>(std::lround(200.0 * count / max_count));
    int x = 16 + static_cast<int>(i) * (kBarW + kGap);
    out << "<rect x=\"" << x << "\" y=\"" << (kBase - h) << "\" width=\"" << kBarW
        << "\" height=\"" << h << "\" fill=\"" << kColors[i] << "\"/>\n";
    out << "<text x=\"" << (x + kBarW / 2) << "\" y=\"" << (kBase + 18)
        << "\" text-anchor=\"middle\" font-size=\"12\">"
        << to_string(static_cast<ScoreClass>(i)) << "</text>\n";
    out << "<text x=\"" << (x + kBarW / 2) << "\" y=\"" << (kBase - h - 6)
        << "\" text-anchor=\"middle\" font-size=\"12\">" << count << "</text>\n";
  }
  out << "</svg>\n";
}

void write_curve_csv(const std::vector<EvaluationReport>& reports, const std::string& path) {
  if (reports.empty()) raise(ErrorCode::invalid_argument, "no reports for curve");
  for (const auto& r : reports) require_games(r);
  auto out = open_out(path);
  out << "checkpoint_frames,median,mean,superhuman\n";
  for (const auto& r : reports)
    out << r.checkpoint_frames << ',' << fmt(r.median) << ',' << fmt(r.mean) << ','
        << r.superhuman_count << '\n';
}

void write_curve_svg(const std::vector<EvaluationReport>& reports, const std::string& path) {
  if (reports.empty()) raise(ErrorCode::invalid_argument, "no reports for curve");
  for (const auto& r : reports) require_games(r);
  constexpr int kWidth = 480, kHeight = 300;
  constexpr double kLeft = 50, kRight = 460, kTop = 20, kBottom = 260;
  double max_median = 0.0;
  for (const auto& r : reports) max_median = std::max(max_median, r.median);
  if (max_median <= 0.0) max_median = 1.0;
  auto out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\">\n";
  out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kBottom << "\" x2=\"" << kRight << "\" y2=\""
      << kBottom << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kBottom << "\" stroke=\"black\"/>\n";
  out << "<polyline fill=\"none\" stroke=\"#2166ac\" stroke-width=\"2\" points=\"";
  const size_t n = reports.size();
  for (size_t i = 0; i < n; ++i) {
    double x = n == 1 ? kLeft : kLeft + (kRight - kLeft) * static_cast<double>(i) / (n - 1);
    double y = kBottom - (kBottom - kTop) * (reports[i].median / max_median);
    out << fmt(x) << ',' << fmt(y);
    if (i + 1 < n) out << ' ';
  }
  out << "\"/>\n";
  for (size_t i = 0; i < n; ++i) {
    double x = n == 1 ? kLeft : kLeft + (kRight - kLeft) * static_cast<double>(i) / (n - 1);
    out << "<text x=\"" << fmt(x) << "\" y=\"" << (kBottom + 18)
        << "\" text-anchor=\"middle\" font-size=\"11\">" << reports[i].checkpoint_frames
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace saber
