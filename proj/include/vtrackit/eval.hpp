#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "vtrackit/dataset.hpp"
#include "vtrackit/geometry.hpp"
#include "vtrackit/models.hpp"

namespace vtrackit::eval {

struct LengthMismatch : std::runtime_error {
  LengthMismatch(std::size_t a, std::size_t b)
      : std::runtime_error("trajectory length mismatch: " + std::to_string(a) +
                           " vs " + std::to_string(b)) {}
};

// Mean / final Euclidean displacement between prediction and ground truth.
double ade(const std::vector<Vec2>& pred, const std::vector<Vec2>& gt);
double fde(const std::vector<Vec2>& pred, const std::vector<Vec2>& gt);

double min_ade(const std::vector<std::vector<Vec2>>& samples,
               const std::vector<Vec2>& gt);
double min_fde(const std::vector<std::vector<Vec2>>& samples,
               const std::vector<Vec2>& gt);

// Fraction of entries whose best-of-k FDE strictly exceeds the threshold.
double miss_rate(const std::vector<double>& best_fde_per_window,
                 double threshold_m = 2.0);

// Deterministic pairwise reduction in index order; safe to use after
// parallel evaluation.
double pairwise_sum(const std::vector<double>& values);
double pairwise_mean(const std::vector<double>& values);

// p in [0, 1]; linear interpolation between order statistics.
double percentile(std::vector<double> values, double p);

// ---- benchmark harness ----

enum class Task { AllVehicles, EgoOnly };
const char* to_string(Task t);

struct BenchmarkOptions {
  std::vector<int> ks = {1, 3, 5};
  std::vector<int> horizons = {5, 6, 8};
  Task task = Task::AllVehicles;
  bool per_map = true;
  double miss_threshold_m = 2.0;
  bool missrate_per_sample = false;  // literal per-sample reading
  std::uint64_t seed = 0;
};

struct MetricCell {
  double min_ade = 0.0;
  double min_fde = 0.0;
  double miss_rate = 0.0;
};

struct MetricReport {
  std::string model_tag;
  std::string split;
  Task task = Task::AllVehicles;
  int window_count = 0;
  int scored_tracks = 0;
  std::uint64_t seed = 0;

  std::vector<int> ks;
  std::map<int, MetricCell> by_k;        // full horizon
  MetricCell k_average;                  // mean of the k columns
  std::vector<int> horizons;
  std::map<int, MetricCell> by_horizon;  // at the largest k
  std::map<std::string, MetricCell> by_map;  // at the largest k
  MetricCell overall;                    // at the largest k

  // per-track best-of-k errors at the full horizon, for histograms
  std::vector<double> best_ade_values;
  std::vector<double> best_fde_values;
};

// Produces the k samples for one window; nested evaluation reuses the first
// samples of the largest k.
using PredictFn = std::function<models::PredictionSet(
    const dataset::TrajectoryWindow&, int k, std::uint64_t seed)>;

MetricReport benchmark(const PredictFn& predict,
                       const std::vector<dataset::TrajectoryWindow>& windows,
                       const BenchmarkOptions& opts);

// Ground-truth passthrough, for pipeline sanity checks.
PredictFn oracle_predictor();
PredictFn model_predictor(const models::Generator& gen, const models::Correction* cm,
                          const dataset::FeatureStats& stats);

}  // namespace vtrackit::eval
