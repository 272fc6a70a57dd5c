#include <cmath>
#include <limits>

#include "doctest.h"
#include "vtrackit/eval.hpp"
#include "vtrackit/report.hpp"

using namespace vtrackit;
using namespace vtrackit::eval;

namespace {

std::vector<Vec2> straight(double step, int n = 8, Vec2 offset = {0, 0}) {
  std::vector<Vec2> out;
  for (int t = 1; t <= n; ++t) out.push_back(Vec2{step * t, 0.0} + offset);
  return out;
}

dataset::TrajectoryWindow window_with_future(const std::vector<Vec2>& fut,
                                             const std::string& archetype = "UrbanLow") {
  dataset::TrajectoryWindow w;
  w.archetype = archetype;
  w.vehicle_ids = {0};
  std::vector<Vec2> obs;
  for (int t = -7; t <= 0; ++t) obs.push_back({static_cast<double>(t), 0.0});
  w.obs.push_back(obs);
  w.fut.push_back(fut);
  std::vector<dataset::ContextRow> ctx(8);
  for (auto& row : ctx) {
    row.lane_type = "Driving";
    row.right_mark_type = "Solid";
    row.left_mark_type = "Broken";
    row.possible_maneuvers = "Left";
  }
  w.context.push_back(ctx);
  return w;
}

// plain loops, kept deliberately independent of the library implementations
double brute_ade(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += std::sqrt((a[i].x - b[i].x) * (a[i].x - b[i].x) +
                   (a[i].y - b[i].y) * (a[i].y - b[i].y));
  return s / a.size();
}

double brute_fde(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  const auto& p = a.back();
  const auto& q = b.back();
  return std::sqrt((p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y));
}

}  // namespace

TEST_CASE("ade and fde hand cases") {
  const auto gt = straight(1.0);
  CHECK(ade(gt, gt) == 0.0);
  CHECK(fde(gt, gt) == 0.0);

  const auto shifted = straight(1.0, 8, {0.0, 1.0});
  CHECK(ade(shifted, gt) == doctest::Approx(1.0));
  CHECK(fde(shifted, gt) == doctest::Approx(1.0));

  auto last_off = gt;
  last_off.back() = {last_off.back().x + 3.0, last_off.back().y + 4.0};
  CHECK(ade(last_off, gt) == doctest::Approx(0.625));
  CHECK(fde(last_off, gt) == doctest::Approx(5.0));

  CHECK_THROWS_AS(ade(straight(1.0, 5), gt), LengthMismatch);
}

TEST_CASE("min over k samples") {
  const auto gt = straight(1.0);
  const auto a = straight(1.0, 8, {0.0, 1.2});
  const auto b = straight(1.0, 8, {0.0, 0.7});
  CHECK(min_ade({a}, gt) == doctest::Approx(1.2));
  CHECK(min_ade({a, b}, gt) == doctest::Approx(0.7));
  CHECK(min_ade({a, b, gt}, gt) == 0.0);
}

TEST_CASE("miss rate uses a strict threshold") {
  CHECK(miss_rate({1.0, 1.5, 2.0}) == 0.0);  // exactly 2.0 is not a miss
  CHECK(miss_rate({2.0001, 1.0}) == doctest::Approx(0.5));
  CHECK(miss_rate({}) == 0.0);
  CHECK(miss_rate({5.0, 7.0}, std::numeric_limits<double>::infinity()) == 0.0);
  CHECK(miss_rate({5.0, 0.0}, 0.0) == doctest::Approx(0.5));
}

TEST_CASE("pairwise reduction matches plain summation") {
  Rng rng(5);
  std::vector<double> values;
  for (int i = 0; i < 1234; ++i) values.push_back(rng.uniform(-10, 10));
  double plain = 0;
  for (double v : values) plain += v;
  CHECK(pairwise_sum(values) == doctest::Approx(plain).epsilon(1e-12));
  CHECK(pairwise_mean(values) == doctest::Approx(plain / 1234).epsilon(1e-12));
}

TEST_CASE("percentile interpolates order statistics") {
  CHECK(percentile({1, 2, 3, 4, 5}, 0.0) == 1.0);
  CHECK(percentile({1, 2, 3, 4, 5}, 1.0) == 5.0);
  CHECK(percentile({1, 2, 3, 4, 5}, 0.5) == 3.0);
  CHECK(percentile({0.0, 10.0}, 0.95) == doctest::Approx(9.5));
}

TEST_CASE("brute-force oracle equivalence on hand-built windows") {
  Rng rng(31);
  std::vector<dataset::TrajectoryWindow> windows;
  std::vector<models::PredictionSet> sets;
  for (int i = 0; i < 20; ++i) {
    std::vector<Vec2> gt;
    for (int t = 0; t < 8; ++t) gt.push_back({rng.uniform(-20, 20), rng.uniform(-20, 20)});
    windows.push_back(window_with_future(gt));
    models::PredictionSet set;
    set.k = 5;
    for (int s = 0; s < 5; ++s) {
      std::vector<Vec2> sample;
      for (int t = 0; t < 8; ++t)
        sample.push_back({rng.uniform(-20, 20), rng.uniform(-20, 20)});
      set.trajectories.push_back({sample});
    }
    sets.push_back(set);
  }

  // library route
  BenchmarkOptions opts;
  opts.ks = {1, 3, 5};
  opts.horizons = {5, 6, 8};
  std::size_t call_idx = 0;
  auto predict = [&](const dataset::TrajectoryWindow&, int, std::uint64_t) {
    return sets[call_idx++];
  };
  const auto rep = benchmark(predict, windows, opts);

  // independent brute force
  for (int k : {1, 3, 5}) {
    double sum_ade = 0, sum_fde = 0;
    int misses = 0;
    for (int i = 0; i < 20; ++i) {
      double best_a = 1e18, best_f = 1e18;
      for (int s = 0; s < k; ++s) {
        best_a = std::min(best_a, brute_ade(sets[static_cast<std::size_t>(i)].trajectories[static_cast<std::size_t>(s)][0],
                                            windows[static_cast<std::size_t>(i)].fut[0]));
        best_f = std::min(best_f, brute_fde(sets[static_cast<std::size_t>(i)].trajectories[static_cast<std::size_t>(s)][0],
                                            windows[static_cast<std::size_t>(i)].fut[0]));
      }
      sum_ade += best_a;
      sum_fde += best_f;
      if (best_f > 2.0) ++misses;
    }
    CHECK(std::abs(rep.by_k.at(k).min_ade - sum_ade / 20) < 1e-9);
    CHECK(std::abs(rep.by_k.at(k).min_fde - sum_fde / 20) < 1e-9);
    CHECK(std::abs(rep.by_k.at(k).miss_rate - misses / 20.0) < 1e-9);
  }
}

TEST_CASE("nested sampling makes min metrics monotone in k") {
  Rng rng(17);
  std::vector<dataset::TrajectoryWindow> windows;
  for (int i = 0; i < 10; ++i) {
    std::vector<Vec2> gt;
    for (int t = 0; t < 8; ++t) gt.push_back({rng.uniform(-5, 5), rng.uniform(-5, 5)});
    windows.push_back(window_with_future(gt));
  }
  auto predict = [&](const dataset::TrajectoryWindow& w, int k, std::uint64_t seed) {
    models::PredictionSet set;
    set.k = k;
    Rng r(seed);
    for (int s = 0; s < k; ++s) {
      std::vector<Vec2> sample;
      for (int t = 0; t < 8; ++t)
        sample.push_back({w.fut[0][static_cast<std::size_t>(t)].x + r.uniform(-4, 4),
                          w.fut[0][static_cast<std::size_t>(t)].y + r.uniform(-4, 4)});
      set.trajectories.push_back({sample});
    }
    return set;
  };
  BenchmarkOptions opts;
  opts.ks = {1, 3, 5};
  const auto rep = benchmark(predict, windows, opts);
  CHECK(rep.by_k.at(5).min_ade <= rep.by_k.at(3).min_ade);
  CHECK(rep.by_k.at(3).min_ade <= rep.by_k.at(1).min_ade);
  CHECK(rep.by_k.at(5).min_fde <= rep.by_k.at(3).min_fde);
}

TEST_CASE("benchmark report structure, horizons, and the perfect oracle") {
  Rng rng(23);
  std::vector<dataset::TrajectoryWindow> windows;
  const char* archetypes[] = {"UrbanLow", "Highway"};
  for (int i = 0; i < 12; ++i) {
    std::vector<Vec2> gt;
    for (int t = 0; t < 8; ++t) gt.push_back({rng.uniform(-9, 9), rng.uniform(-9, 9)});
    windows.push_back(window_with_future(gt, archetypes[i % 2]));
  }
  BenchmarkOptions opts;
  opts.ks = {1, 3, 5};
  opts.horizons = {5, 6, 8};
  const auto rep = benchmark(oracle_predictor(), windows, opts);

  CHECK(rep.by_k.size() == 3);
  CHECK(rep.by_horizon.size() == 3);
  CHECK(rep.by_map.size() == 2);
  for (const auto& [k, cell] : rep.by_k) {
    (void)k;
    CHECK(cell.min_ade == 0.0);
    CHECK(cell.min_fde == 0.0);
    CHECK(cell.miss_rate == 0.0);
  }
  for (const auto& [h, cell] : rep.by_horizon) {
    (void)h;
    CHECK(cell.min_ade == 0.0);
  }
  CHECK(rep.k_average.min_ade == 0.0);
  CHECK(rep.window_count == 12);
  CHECK(rep.scored_tracks == 12);

  const std::string table = report::format_topk_table(rep, "top-k");
  CHECK(table.find("minADE") != std::string::npos);
  CHECK(table.find("minFDE") != std::string::npos);
  CHECK(table.find("Miss Rate") != std::string::npos);
  CHECK(table.find("k=1") != std::string::npos);
  CHECK(table.find("k=5") != std::string::npos);
  CHECK(table.find("Average") != std::string::npos);
}

TEST_CASE("horizon truncation changes metrics as expected") {
  // error grows with t, so shorter horizons must give smaller ADE
  std::vector<Vec2> gt, pred;
  for (int t = 1; t <= 8; ++t) {
    gt.push_back({static_cast<double>(t), 0.0});
    pred.push_back({static_cast<double>(t), 0.5 * t});
  }
  auto w = window_with_future(gt);
  auto predict = [&](const dataset::TrajectoryWindow&, int k, std::uint64_t) {
    models::PredictionSet set;
    set.k = k;
    for (int s = 0; s < k; ++s) set.trajectories.push_back({pred});
    return set;
  };
  BenchmarkOptions opts;
  opts.ks = {1};
  opts.horizons = {5, 8};
  const auto rep = benchmark(predict, {w}, opts);
  CHECK(rep.by_horizon.at(5).min_ade < rep.by_horizon.at(8).min_ade);
  CHECK(rep.by_horizon.at(5).min_fde == doctest::Approx(2.5));
  CHECK(rep.by_horizon.at(8).min_fde == doctest::Approx(4.0));
}

TEST_CASE("ego-only task scores only the first track") {
  Rng rng(29);
  dataset::TrajectoryWindow w = window_with_future(straight(1.0));
  // add a second vehicle with an enormous error
  w.vehicle_ids.push_back(1);
  w.obs.push_back(w.obs[0]);
  w.fut.push_back(straight(1.0, 8, {100.0, 100.0}));
  w.context.push_back(w.context[0]);

  auto predict = [&](const dataset::TrajectoryWindow& win, int k, std::uint64_t) {
    models::PredictionSet set;
    set.k = k;
    for (int s = 0; s < k; ++s) {
      std::vector<std::vector<Vec2>> sample;
      for (std::size_t v = 0; v < win.vehicle_ids.size(); ++v)
        sample.push_back(straight(1.0));  // correct for ego, far off for the other
      set.trajectories.push_back(sample);
    }
    return set;
  };
  BenchmarkOptions opts;
  opts.ks = {1};
  opts.task = Task::EgoOnly;
  const auto rep = benchmark(predict, {w}, opts);
  CHECK(rep.scored_tracks == 1);
  CHECK(rep.by_k.at(1).min_ade == 0.0);

  opts.task = Task::AllVehicles;
  const auto rep_all = benchmark(predict, {w}, opts);
  CHECK(rep_all.scored_tracks == 2);
  CHECK(rep_all.by_k.at(1).min_ade > 10.0);
}

TEST_CASE("histograms conserve counts") {
  const auto h1 = report::make_histogram({0.7}, 10, 0.0, 1.0);
  CHECK(h1.total() == 1);
  long nonzero = 0;
  for (long c : h1.counts) nonzero += c > 0 ? 1 : 0;
  CHECK(nonzero == 1);

  Rng rng(3);
  std::vector<double> values;
  for (int i = 0; i < 500; ++i) values.push_back(rng.uniform(0, 12));
  const auto h = report::make_histogram(values, 24);
  CHECK(h.total() == 500);

  const auto csv = report::histogram_csv({{"Before", h}});
  CHECK(csv.find("Before") != std::string::npos);
  const auto svg = report::histogram_svg({{"Before", h}}, "fde", "m");
  CHECK(svg.find("<svg") != std::string::npos);
}
