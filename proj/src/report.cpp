#include "stnet/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "stnet/dataset.hpp"
#include "stnet/errors.hpp"

namespace stnet {

namespace {

MetricSummary summarize(const std::vector<RunMetrics>& runs, std::vector<double> RunMetrics::*field) {
  const std::size_t epochs = runs.front().epochs();
  const double r = static_cast<double>(runs.size());
  MetricSummary s;
  s.mean.resize(epochs);
  s.std.resize(epochs);
  for (std::size_t e = 0; e < epochs; ++e) {
    double sum = 0.0;
    for (const auto& run : runs) sum += (run.*field)[e];
    const double mean = sum / r;
    double sq = 0.0;
    for (const auto& run : runs) sq += ((run.*field)[e] - mean) * ((run.*field)[e] - mean);
    s.mean[e] = mean;
    s.std[e] = runs.size() > 1 ? std::sqrt(sq / (r - 1.0)) : 0.0;
  }
  return s;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string_view axis_label(std::string_view metric) {
  if (metric == "train_loss") return "train loss";
  if (metric == "train_acc") return "train accuracy";
  return "test accuracy";
}

}  // namespace

ExperimentReport ExperimentReport::aggregate(std::vector<RunMetrics> runs) {
  if (runs.empty()) throw ValidationError("report needs at least one run");
  for (const auto& run : runs) {
    if (run.epochs() != runs.front().epochs() || run.train_accuracy.size() != run.epochs() ||
        run.test_accuracy.size() != run.epochs()) {
      throw ValidationError("runs disagree on epoch count");
    }
  }
  ExperimentReport report;
  report.train_loss = summarize(runs, &RunMetrics::train_loss);
  report.train_accuracy = summarize(runs, &RunMetrics::train_accuracy);
  report.test_accuracy = summarize(runs, &RunMetrics::test_accuracy);
  report.runs = std::move(runs);
  return report;
}

const MetricSummary& ExperimentReport::summary(std::string_view metric) const {
  if (metric == "train_loss") return train_loss;
  if (metric == "train_acc") return train_accuracy;
  if (metric == "test_acc") return test_accuracy;
  throw ValidationError("unknown metric '" + std::string(metric) + "' (expected train_loss, train_acc or test_acc)");
}

std::string format_csv(const ExperimentReport& report) {
  if (report.runs.empty()) throw ValidationError("cannot write an empty report");
  std::string out(kCsvHeader);
  out += '\n';
  for (std::size_t r = 0; r < report.runs.size(); ++r) {
    const auto& run = report.runs[r];
    for (std::size_t e = 0; e < run.epochs(); ++e) {
      out += std::to_string(r) + "," + std::to_string(e + 1) + "," + fixed6(run.train_loss[e]) + "," +
             fixed6(run.train_accuracy[e]) + "," + fixed6(run.test_accuracy[e]) + "\n";
    }
  }
  return out;
}

void emit_csv(const ExperimentReport& report, const std::filesystem::path& path) {
  write_text_file(path, format_csv(report));
}

std::vector<RunMetrics> parse_metrics_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw ValidationError("metrics CSV must start with '" + std::string(kCsvHeader) + "'");
  }
  std::map<long, RunMetrics> by_run;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    long run = 0, epoch = 0;
    double loss = 0, train_acc = 0, test_acc = 0;
    if (std::sscanf(line.c_str(), "%ld,%ld,%lf,%lf,%lf", &run, &epoch, &loss, &train_acc, &test_acc) != 5) {
      throw ValidationError("malformed metrics CSV line " + std::to_string(line_no));
    }
    RunMetrics& m = by_run[run];
    if (static_cast<std::size_t>(epoch) != m.epochs() + 1) {
      throw ValidationError("metrics CSV line " + std::to_string(line_no) + ": epochs out of order");
    }
    m.train_loss.push_back(loss);
    m.train_accuracy.push_back(train_acc);
    m.test_accuracy.push_back(test_acc);
  }
  std::vector<RunMetrics> runs;
  for (auto& [_, m] : by_run) runs.push_back(std::move(m));
  return runs;
}

std::string render_svg_plot(const ExperimentReport& report, std::string_view metric) {
  const MetricSummary& s = report.summary(metric);
  const std::size_t epochs = s.mean.size();
  if (epochs == 0) throw ValidationError("cannot plot an empty report");

  constexpr double W = 640, H = 400, left = 70, right = 20, top = 30, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;
  double lo = s.mean[0] - s.std[0], hi = s.mean[0] + s.std[0];
  for (std::size_t e = 0; e < epochs; ++e) {
    lo = std::min(lo, s.mean[e] - s.std[e]);
    hi = std::max(hi, s.mean[e] + s.std[e]);
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  auto px = [&](std::size_t e) { return left + (epochs == 1 ? pw / 2 : pw * static_cast<double>(e) / static_cast<double>(epochs - 1)); };
  auto py = [&](double v) { return top + ph * (hi - v) / (hi - lo); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << " " << H << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  svg << "<polygon class=\"std-band\" fill=\"#1f77b4\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
  for (std::size_t e = 0; e < epochs; ++e) svg << coord(px(e)) << "," << coord(py(s.mean[e] + s.std[e])) << " ";
  for (std::size_t e = epochs; e-- > 0;) svg << coord(px(e)) << "," << coord(py(s.mean[e] - s.std[e])) << " ";
  svg << "\"/>\n";

  svg << "<polyline class=\"mean\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
  for (std::size_t e = 0; e < epochs; ++e) svg << (e ? " " : "") << coord(px(e)) << "," << coord(py(s.mean[e]));
  svg << "\"/>\n";

  svg << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << left - 6 << "\" y=\"" << top + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << fixed6(hi)
      << "</text>\n";
  svg << "<text x=\"" << left - 6 << "\" y=\"" << top + ph << "\" text-anchor=\"end\" font-size=\"11\">" << fixed6(lo)
      << "</text>\n";
  svg << "<text x=\"" << left << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\" font-size=\"11\">1</text>\n";
  svg << "<text x=\"" << left + pw << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
      << epochs << "</text>\n";
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"13\">epoch</text>\n";
  svg << "<text x=\"18\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
      << top + ph / 2 << ")\">" << axis_label(metric) << "</text>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << axis_label(metric)
      << " (mean ± 1 std over " << report.runs.size() << " runs)</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

void emit_svg_plot(const ExperimentReport& report, std::string_view metric, const std::filesystem::path& path) {
  write_text_file(path, render_svg_plot(report, metric));
}

}  // namespace stnet
