#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "stnet/trainer.hpp"

namespace stnet {

struct MetricSummary {
  std::vector<double> mean;
  /// Sample standard deviation (R-1 denominator); 0 when R == 1.
  std::vector<double> std;
};

struct ExperimentReport {
  std::vector<RunMetrics> runs;
  MetricSummary train_loss, train_accuracy, test_accuracy;

  std::size_t epochs() const { return runs.empty() ? 0 : runs.front().epochs(); }
  /// Builds a report with per-epoch mean/std over `runs` (equal lengths required).
  static ExperimentReport aggregate(std::vector<RunMetrics> runs);
  /// metric ∈ {train_loss, train_acc, test_acc}.
  const MetricSummary& summary(std::string_view metric) const;
};

inline constexpr std::string_view kCsvHeader = "run,epoch,train_loss,train_acc,test_acc";

/// Header plus one row per (run, epoch); 1-based epochs, 0-based runs, 6 decimals.
std::string format_csv(const ExperimentReport& report);
void emit_csv(const ExperimentReport& report, const std::filesystem::path& path);
/// Reads a metrics CSV back into per-run curves (rows grouped by run index).
std::vector<RunMetrics> parse_metrics_csv(std::string_view text);

/// Standalone SVG: mean polyline over a ±1 std band, labeled axes.
std::string render_svg_plot(const ExperimentReport& report, std::string_view metric);
void emit_svg_plot(const ExperimentReport& report, std::string_view metric, const std::filesystem::path& path);

}  // namespace stnet
