#include "vtrackit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace vtrackit::eval {

double ade(const std::vector<Vec2>& pred, const std::vector<Vec2>& gt) {
  if (pred.size() != gt.size()) throw LengthMismatch(pred.size(), gt.size());
  if (pred.empty()) throw LengthMismatch(0, 0);
  double sum = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) sum += pred[t].dist(gt[t]);
  return sum / static_cast<double>(pred.size());
}

double fde(const std::vector<Vec2>& pred, const std::vector<Vec2>& gt) {
  if (pred.size() != gt.size()) throw LengthMismatch(pred.size(), gt.size());
  if (pred.empty()) throw LengthMismatch(0, 0);
  return pred.back().dist(gt.back());
}

double min_ade(const std::vector<std::vector<Vec2>>& samples,
               const std::vector<Vec2>& gt) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) best = std::min(best, ade(s, gt));
  return best;
}

double min_fde(const std::vector<std::vector<Vec2>>& samples,
               const std::vector<Vec2>& gt) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) best = std::min(best, fde(s, gt));
  return best;
}

double miss_rate(const std::vector<double>& best_fde_per_window, double threshold_m) {
  if (best_fde_per_window.empty()) return 0.0;
  std::size_t misses = 0;
  for (double v : best_fde_per_window)
    if (v > threshold_m) ++misses;
  return static_cast<double>(misses) / static_cast<double>(best_fde_per_window.size());
}

double pairwise_sum(const std::vector<double>& values) {
  std::function<double(std::size_t, std::size_t)> rec =
      [&](std::size_t lo, std::size_t hi) -> double {
    if (hi - lo == 0) return 0.0;
    if (hi - lo == 1) return values[lo];
    const std::size_t mid = lo + (hi - lo) / 2;
    return rec(lo, mid) + rec(mid, hi);
  };
  return rec(0, values.size());
}

double pairwise_mean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  return pairwise_sum(values) / static_cast<double>(values.size());
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double idx = p * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(idx));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(idx));
  const double w = idx - static_cast<double>(lo);
  return values[lo] * (1.0 - w) + values[hi] * w;
}

const char* to_string(Task t) {
  return t == Task::AllVehicles ? "AllVehicles" : "EgoOnly";
}

MetricReport benchmark(const PredictFn& predict,
                       const std::vector<dataset::TrajectoryWindow>& windows,
                       const BenchmarkOptions& opts) {
  MetricReport report;
  report.task = opts.task;
  report.ks = opts.ks;
  report.horizons = opts.horizons;
  report.seed = opts.seed;
  report.window_count = static_cast<int>(windows.size());

  const int k_max = *std::max_element(opts.ks.begin(), opts.ks.end());
  const int full_h = windows.empty() ? 8 : static_cast<int>(windows[0].fut[0].size());

  // per scored track: [k index] ade/fde at full horizon, plus per-horizon at k_max
  struct TrackErrors {
    std::string archetype;
    std::vector<double> ade_by_k, fde_by_k;
    std::vector<double> sample_fde;  // all k_max samples, for the literal miss rate
    std::vector<double> ade_by_h, fde_by_h;
  };
  std::vector<TrackErrors> tracks;

  for (std::size_t wi = 0; wi < windows.size(); ++wi) {
    const auto& w = windows[wi];
    const auto set = predict(w, k_max, Rng::derive(opts.seed, wi));
    const std::size_t n_score =
        opts.task == Task::EgoOnly ? 1 : w.vehicle_ids.size();
    for (std::size_t v = 0; v < n_score; ++v) {
      TrackErrors te;
      te.archetype = w.archetype;
      // distances per sample per step
      std::vector<std::vector<double>> dist(static_cast<std::size_t>(set.k));
      for (int s = 0; s < set.k; ++s) {
        const auto& traj = set.trajectories[static_cast<std::size_t>(s)][v];
        for (int t = 0; t < full_h; ++t)
          dist[static_cast<std::size_t>(s)].push_back(
              traj[static_cast<std::size_t>(t)].dist(w.fut[v][static_cast<std::size_t>(t)]));
      }
      auto ade_of = [&](int s, int h) {
        double sum = 0.0;
        for (int t = 0; t < h; ++t) sum += dist[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)];
        return sum / h;
      };
      for (int k : opts.ks) {
        double best_a = std::numeric_limits<double>::infinity();
        double best_f = std::numeric_limits<double>::infinity();
        for (int s = 0; s < std::min(k, set.k); ++s) {
          best_a = std::min(best_a, ade_of(s, full_h));
          best_f = std::min(best_f, dist[static_cast<std::size_t>(s)][static_cast<std::size_t>(full_h - 1)]);
        }
        te.ade_by_k.push_back(best_a);
        te.fde_by_k.push_back(best_f);
      }
      for (int s = 0; s < set.k; ++s)
        te.sample_fde.push_back(dist[static_cast<std::size_t>(s)][static_cast<std::size_t>(full_h - 1)]);
      for (int h : opts.horizons) {
        double best_a = std::numeric_limits<double>::infinity();
        double best_f = std::numeric_limits<double>::infinity();
        for (int s = 0; s < set.k; ++s) {
          best_a = std::min(best_a, ade_of(s, h));
          best_f = std::min(best_f, dist[static_cast<std::size_t>(s)][static_cast<std::size_t>(h - 1)]);
        }
        te.ade_by_h.push_back(best_a);
        te.fde_by_h.push_back(best_f);
      }
      tracks.push_back(std::move(te));
    }
  }
  report.scored_tracks = static_cast<int>(tracks.size());

  auto cell_from = [&](const std::function<bool(const TrackErrors&)>& filter,
                       const std::function<double(const TrackErrors&)>& get_ade,
                       const std::function<double(const TrackErrors&)>& get_fde) {
    MetricCell cell;
    std::vector<double> ades, fdes;
    for (const auto& te : tracks) {
      if (!filter(te)) continue;
      ades.push_back(get_ade(te));
      fdes.push_back(get_fde(te));
    }
    cell.min_ade = pairwise_mean(ades);
    cell.min_fde = pairwise_mean(fdes);
    cell.miss_rate = miss_rate(fdes, opts.miss_threshold_m);
    return cell;
  };

  auto all = [](const TrackErrors&) { return true; };
  for (std::size_t ki = 0; ki < opts.ks.size(); ++ki) {
    MetricCell cell = cell_from(
        all, [&](const TrackErrors& te) { return te.ade_by_k[ki]; },
        [&](const TrackErrors& te) { return te.fde_by_k[ki]; });
    if (opts.missrate_per_sample) {
      std::vector<double> sample_fdes;
      const int k = opts.ks[ki];
      for (const auto& te : tracks)
        for (int s = 0; s < std::min<int>(k, static_cast<int>(te.sample_fde.size())); ++s)
          sample_fdes.push_back(te.sample_fde[static_cast<std::size_t>(s)]);
      cell.miss_rate = miss_rate(sample_fdes, opts.miss_threshold_m);
    }
    report.by_k[opts.ks[ki]] = cell;
  }
  for (const auto& [k, cell] : report.by_k) {
    (void)k;
    report.k_average.min_ade += cell.min_ade / static_cast<double>(report.by_k.size());
    report.k_average.min_fde += cell.min_fde / static_cast<double>(report.by_k.size());
    report.k_average.miss_rate += cell.miss_rate / static_cast<double>(report.by_k.size());
  }

  for (std::size_t hi = 0; hi < opts.horizons.size(); ++hi) {
    report.by_horizon[opts.horizons[hi]] = cell_from(
        all, [&](const TrackErrors& te) { return te.ade_by_h[hi]; },
        [&](const TrackErrors& te) { return te.fde_by_h[hi]; });
  }

  std::size_t k_max_idx = 0;
  for (std::size_t i = 1; i < opts.ks.size(); ++i)
    if (opts.ks[i] > opts.ks[k_max_idx]) k_max_idx = i;
  report.overall = cell_from(
      all, [&](const TrackErrors& te) { return te.ade_by_k[k_max_idx]; },
      [&](const TrackErrors& te) { return te.fde_by_k[k_max_idx]; });
  if (opts.per_map) {
    std::set<std::string> maps;
    for (const auto& te : tracks) maps.insert(te.archetype);
    for (const auto& m : maps) {
      report.by_map[m] = cell_from(
          [&](const TrackErrors& te) { return te.archetype == m; },
          [&](const TrackErrors& te) { return te.ade_by_k[k_max_idx]; },
          [&](const TrackErrors& te) { return te.fde_by_k[k_max_idx]; });
    }
  }

  for (const auto& te : tracks) {
    report.best_ade_values.push_back(te.ade_by_k[k_max_idx]);
    report.best_fde_values.push_back(te.fde_by_k[k_max_idx]);
  }
  return report;
}

PredictFn oracle_predictor() {
  return [](const dataset::TrajectoryWindow& w, int k, std::uint64_t seed) {
    models::PredictionSet set;
    set.k = k;
    set.seed = seed;
    for (int s = 0; s < k; ++s) set.trajectories.push_back(w.fut);
    return set;
  };
}

PredictFn model_predictor(const models::Generator& gen, const models::Correction* cm,
                          const dataset::FeatureStats& stats) {
  return [&gen, cm, &stats](const dataset::TrajectoryWindow& w, int k,
                            std::uint64_t seed) {
    return models::predict_k(gen, cm, w, stats, k, seed);
  };
}

}  // namespace vtrackit::eval
