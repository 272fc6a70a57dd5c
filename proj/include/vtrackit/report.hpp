#pragma once

#include <string>
#include <vector>

#include "vtrackit/eval.hpp"
#include "vtrackit/models.hpp"

namespace vtrackit::report {

// Benchmark tables in the dataset's publication layout: metric rows against
// top-k columns, per-map columns, and per-horizon columns.
std::string format_topk_table(const eval::MetricReport& rep, const std::string& title);
std::string format_map_table(const eval::MetricReport& rep, const std::string& title);
std::string format_horizon_table(const eval::MetricReport& rep, const std::string& title);
std::string report_to_json(const eval::MetricReport& rep);

void write_text(const std::string& text, const std::string& path);

void write_losses_csv(const std::vector<models::EpochStat>& curve,
                      const std::string& path);

// ---- histograms ----

struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<long> counts;

  long total() const;
  double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }
};

Histogram make_histogram(const std::vector<double>& values, int bins,
                         double lo, double hi);
Histogram make_histogram(const std::vector<double>& values, int bins);

struct HistogramSeries {
  std::string label;
  Histogram hist;
};

std::string histogram_csv(const std::vector<HistogramSeries>& series);
// Overlaid bar chart; series drawn in order with fixed colors.
std::string histogram_svg(const std::vector<HistogramSeries>& series,
                          const std::string& title, const std::string& x_label);

}  // namespace vtrackit::report
