#pragma once

#include <string>
#include <vector>

#include "core/scoring.hpp"

namespace saber {

// Deterministic CSV/SVG renderers for reports. Byte output is fixed for a
// fixed input (no timestamps, stable number formatting).

void write_report_csv(const EvaluationReport& report, const std::string& path);
void write_histogram_svg(const EvaluationReport& report, const std::string& path);

// Checkpoint curve across several reports (one x position per checkpoint).
void write_curve_csv(const std::vector<EvaluationReport>& reports, const std::string& path);
void write_curve_svg(const std::vector<EvaluationReport>& reports, const std::string& path);

}  // namespace saber
