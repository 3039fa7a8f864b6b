#pragma once

#include "puf_forge/experiment.hpp"
#include "puf_forge/metrics.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace puf_forge {

using LabeledSummary = std::pair<std::string, BoxplotSummary>;

/// Minimal standalone SVG: one box per summary, whiskers, outliers as circles.
std::string render_boxplot_svg(std::span<const LabeledSummary> boxes, std::string_view title,
                               std::string_view axis_label);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
void write_text(const std::filesystem::path& path, std::string_view text);

/// per_crp.csv, summary.json, fhd_boxplot.svg
void write_attack_report(const AttackReport& report, const std::filesystem::path& dir);

/// pairs.csv, entropy.csv, summary.json, fhd_boxplot.svg
void write_evaluation_report(const EvaluationReport& report, const std::filesystem::path& dir);

std::string matrix_csv(std::span<const MatrixRow> rows);
std::string scale_csv(std::span<const ScaleRow> rows);
nlohmann::json scale_json(std::span<const ScaleRow> rows);

/// Shortest round-trip decimal form ("%.17g").
std::string format_double(double value);

}  // namespace puf_forge
