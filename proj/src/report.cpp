#include "vtrackit/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "vtrackit/strfmt.hpp"

namespace vtrackit::report {

namespace {

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  if (s.size() >= width) return s;
  return s + std::string(width - s.size(), ' ');
}

std::string rule(std::size_t width) { return std::string(width, '-') + "\n"; }

struct Column {
  std::string header;
  eval::MetricCell cell;
};

std::string format_metric_table(const std::string& title,
                                const std::vector<Column>& cols) {
  const std::size_t name_w = 12;
  const std::size_t col_w = 12;
  const std::size_t total = name_w + col_w * cols.size();
  std::string out = title + "\n" + rule(total);
  out += pad("Metric", name_w);
  for (const auto& c : cols) out += pad(c.header, col_w);
  out += "\n" + rule(total);
  out += pad("minADE", name_w);
  for (const auto& c : cols) out += pad(fixed2(c.cell.min_ade), col_w);
  out += "\n";
  out += pad("minFDE", name_w);
  for (const auto& c : cols) out += pad(fixed2(c.cell.min_fde), col_w);
  out += "\n";
  out += pad("Miss Rate", name_w);
  for (const auto& c : cols) out += pad(fixed2(c.cell.miss_rate), col_w);
  out += "\n" + rule(total);
  return out;
}

}  // namespace

std::string format_topk_table(const eval::MetricReport& rep, const std::string& title) {
  std::vector<Column> cols;
  for (int k : rep.ks) cols.push_back({"k=" + std::to_string(k), rep.by_k.at(k)});
  cols.push_back({"Average", rep.k_average});
  return format_metric_table(title, cols);
}

std::string format_map_table(const eval::MetricReport& rep, const std::string& title) {
  std::vector<Column> cols;
  for (const auto& [name, cell] : rep.by_map) cols.push_back({name, cell});
  cols.push_back({"Overall", rep.overall});
  return format_metric_table(title, cols);
}

std::string format_horizon_table(const eval::MetricReport& rep,
                                 const std::string& title) {
  std::vector<Column> cols;
  eval::MetricCell avg;
  for (int h : rep.horizons) {
    const auto& cell = rep.by_horizon.at(h);
    cols.push_back({std::to_string(h) + " steps", cell});
    avg.min_ade += cell.min_ade / static_cast<double>(rep.horizons.size());
    avg.min_fde += cell.min_fde / static_cast<double>(rep.horizons.size());
    avg.miss_rate += cell.miss_rate / static_cast<double>(rep.horizons.size());
  }
  cols.push_back({"Average", avg});
  return format_metric_table(title, cols);
}

namespace {

nlohmann::json cell_json(const eval::MetricCell& c) {
  return {{"minADE", c.min_ade}, {"minFDE", c.min_fde}, {"miss_rate", c.miss_rate}};
}

}  // namespace

std::string report_to_json(const eval::MetricReport& rep) {
  nlohmann::json j;
  j["format"] = "vtrackit-report-v1";
  j["model"] = rep.model_tag;
  j["split"] = rep.split;
  j["task"] = eval::to_string(rep.task);
  j["window_count"] = rep.window_count;
  j["scored_tracks"] = rep.scored_tracks;
  j["seed"] = rep.seed;
  nlohmann::json by_k = nlohmann::json::object();
  for (const auto& [k, cell] : rep.by_k) by_k["k=" + std::to_string(k)] = cell_json(cell);
  j["by_k"] = by_k;
  j["k_average"] = cell_json(rep.k_average);
  nlohmann::json by_h = nlohmann::json::object();
  for (const auto& [h, cell] : rep.by_horizon)
    by_h[std::to_string(h) + "_steps"] = cell_json(cell);
  j["by_horizon"] = by_h;
  nlohmann::json by_m = nlohmann::json::object();
  for (const auto& [m, cell] : rep.by_map) by_m[m] = cell_json(cell);
  j["by_map"] = by_m;
  j["overall"] = cell_json(rep.overall);
  return j.dump(2) + "\n";
}

void write_text(const std::string& text, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

void write_losses_csv(const std::vector<models::EpochStat>& curve,
                      const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "epoch,d_loss,g_adv,g_mse,total,val_min_ade,lr\n";
  for (const auto& s : curve) {
    f << s.epoch << ',' << fmt_g9(s.d_loss) << ',' << fmt_g9(s.g_adv) << ','
      << fmt_g9(s.g_mse) << ',' << fmt_g9(s.total) << ',' << fmt_g9(s.val_min_ade)
      << ',' << fmt_g9(s.lr) << "\n";
  }
}

long Histogram::total() const {
  long t = 0;
  for (long c : counts) t += c;
  return t;
}

Histogram make_histogram(const std::vector<double>& values, int bins, double lo,
                         double hi) {
  Histogram h;
  h.lo = lo;
  h.hi = hi > lo ? hi : lo + 1.0;
  h.counts.assign(static_cast<std::size_t>(std::max(1, bins)), 0);
  const double w = h.bin_width();
  for (double v : values) {
    int idx = static_cast<int>((v - h.lo) / w);
    idx = std::clamp(idx, 0, static_cast<int>(h.counts.size()) - 1);
    h.counts[static_cast<std::size_t>(idx)] += 1;
  }
  return h;
}

Histogram make_histogram(const std::vector<double>& values, int bins) {
  double hi = 1.0;
  for (double v : values) hi = std::max(hi, v);
  return make_histogram(values, bins, 0.0, hi * 1.0001);
}

std::string histogram_csv(const std::vector<HistogramSeries>& series) {
  std::string out = "bin_lo,bin_hi";
  for (const auto& s : series) out += "," + s.label;
  out += "\n";
  if (series.empty()) return out;
  const auto& ref = series[0].hist;
  for (std::size_t i = 0; i < ref.counts.size(); ++i) {
    out += fmt_g9(ref.lo + ref.bin_width() * static_cast<double>(i));
    out += ",";
    out += fmt_g9(ref.lo + ref.bin_width() * static_cast<double>(i + 1));
    for (const auto& s : series)
      out += "," + std::to_string(s.hist.counts[i]);
    out += "\n";
  }
  return out;
}

std::string histogram_svg(const std::vector<HistogramSeries>& series,
                          const std::string& title, const std::string& x_label) {
  const int width = 720, height = 420;
  const int ml = 60, mr = 20, mt = 40, mb = 50;
  const int pw = width - ml - mr, ph = height - mt - mb;
  const char* colors[] = {"#4878cf", "#d65f5f", "#6acc65", "#956cb4"};

  long max_count = 1;
  std::size_t nbins = 1;
  for (const auto& s : series) {
    nbins = std::max(nbins, s.hist.counts.size());
    for (long c : s.hist.counts) max_count = std::max(max_count, c);
  }

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
         "\" height=\"" + std::to_string(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + std::to_string(width / 2) + "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">" + title + "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& h = series[si].hist;
    const double bw = static_cast<double>(pw) / static_cast<double>(nbins);
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      if (h.counts[b] == 0) continue;
      const double frac = static_cast<double>(h.counts[b]) / static_cast<double>(max_count);
      const double bar_h = frac * ph;
      const double x = ml + bw * static_cast<double>(b);
      const double y = mt + (ph - bar_h);
      svg += "<rect x=\"" + fmt_g9(x) + "\" y=\"" + fmt_g9(y) + "\" width=\"" +
             fmt_g9(std::max(1.0, bw - 1.0)) + "\" height=\"" + fmt_g9(bar_h) +
             "\" fill=\"" + colors[si % 4] + "\" fill-opacity=\"0.55\"/>\n";
    }
    // legend
    const int ly = mt + 10 + static_cast<int>(si) * 20;
    svg += "<rect x=\"" + std::to_string(width - mr - 130) + "\" y=\"" +
           std::to_string(ly) + "\" width=\"12\" height=\"12\" fill=\"" +
           colors[si % 4] + "\" fill-opacity=\"0.55\"/>\n";
    svg += "<text x=\"" + std::to_string(width - mr - 112) + "\" y=\"" +
           std::to_string(ly + 11) + "\" font-family=\"sans-serif\" font-size=\"13\">" +
           series[si].label + "</text>\n";
  }

  // axes
  svg += "<line x1=\"" + std::to_string(ml) + "\" y1=\"" + std::to_string(mt + ph) +
         "\" x2=\"" + std::to_string(ml + pw) + "\" y2=\"" + std::to_string(mt + ph) +
         "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + std::to_string(ml) + "\" y1=\"" + std::to_string(mt) +
         "\" x2=\"" + std::to_string(ml) + "\" y2=\"" + std::to_string(mt + ph) +
         "\" stroke=\"black\"/>\n";
  if (!series.empty()) {
    svg += "<text x=\"" + std::to_string(ml) + "\" y=\"" + std::to_string(height - 14) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + fmt_g9(series[0].hist.lo) +
           "</text>\n";
    svg += "<text x=\"" + std::to_string(ml + pw - 20) + "\" y=\"" +
           std::to_string(height - 14) + "\" font-family=\"sans-serif\" font-size=\"12\">" +
           fmt_g9(series[0].hist.hi) + "</text>\n";
    svg += "<text x=\"" + std::to_string(ml + pw / 2) + "\" y=\"" +
           std::to_string(height - 14) + "\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"13\">" + x_label + "</text>\n";
    svg += "<text x=\"14\" y=\"" + std::to_string(mt + 10) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + std::to_string(max_count) +
           "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace vtrackit::report
