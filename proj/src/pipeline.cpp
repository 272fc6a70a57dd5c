#include "vtrackit/pipeline.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <thread>

#include "vtrackit/roadnet.hpp"

namespace vtrackit::pipeline {

namespace fs = std::filesystem;

std::string scenario_dir(const std::string& root, const std::string& split, int id) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", id);
  return root + "/" + split + "/" + buf;
}

GenerateSummary generate_dataset(const config::RunConfig& cfg,
                                 const std::string& out_dir) {
  const int per_map = cfg.scenarios_per_map;
  const int total = per_map * static_cast<int>(cfg.maps.size());

  std::vector<roadnet::RoadMap> maps;
  maps.reserve(cfg.maps.size());
  for (auto a : cfg.maps) maps.push_back(roadnet::generate_map(a, cfg.seed));

  std::vector<dataset::SplitItem> items;
  for (int id = 0; id < total; ++id) {
    items.push_back({id, roadnet::to_string(cfg.maps[static_cast<std::size_t>(id / per_map)])});
  }
  const int n_val = total / 5;
  const int n_test = total / 5;
  const int n_train = total - n_val - n_test;
  dataset::Splits splits = dataset::split_dataset(items, n_train, n_val, n_test, cfg.seed);

  std::map<int, std::string> split_of;
  for (int id : splits.train) split_of[id] = "train";
  for (int id : splits.val) split_of[id] = "val";
  for (int id : splits.test) split_of[id] = "test";

  fs::create_directories(out_dir);
  dataset::write_splits_json(splits, out_dir + "/splits.json");

  GenerateSummary summary;
  summary.total = total;
  summary.splits = splits;

  std::mutex tally_mutex;
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int id = next.fetch_add(1);
      if (id >= total) return;
      const int map_idx = id / per_map;
      Rng rng(Rng::derive(Rng::derive(cfg.seed, "scenario"), static_cast<std::uint64_t>(id)));
      sim::ScenarioConfig sc;
      sc.scenario_id = id;
      sc.duration_s = cfg.duration_s;
      sc.n_aggressive = cfg.n_aggressive;
      sc.n_cautious = cfg.n_cautious;
      sc.fuzz = cfg.fuzz;
      const auto log =
          sim::run_scenario(maps[static_cast<std::size_t>(map_idx)], cfg.n_actors, rng, sc);
      dataset::write_scenario(log, scenario_dir(out_dir, split_of.at(id), id));
      std::lock_guard<std::mutex> lock(tally_mutex);
      summary.per_map[roadnet::to_string(log.archetype)] += 1;
      if (log.terminated_by == sim::Termination::EgoCollision) summary.ego_crashes += 1;
    }
  };

  int n_workers = cfg.workers > 0
                      ? cfg.workers
                      : static_cast<int>(std::thread::hardware_concurrency());
  n_workers = std::max(1, std::min(n_workers, total));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int i = 0; i < n_workers; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  return summary;
}

std::vector<dataset::TrajectoryWindow> load_windows(const std::string& data_dir,
                                                    const std::string& split,
                                                    int stride,
                                                    bool exclude_ego_crash) {
  const auto splits = dataset::read_splits_json(data_dir + "/splits.json");
  const std::vector<int>* ids = nullptr;
  if (split == "train") ids = &splits.train;
  else if (split == "val") ids = &splits.val;
  else if (split == "test") ids = &splits.test;
  else throw std::runtime_error("unknown split: " + split);

  std::vector<dataset::TrajectoryWindow> windows;
  for (int id : *ids) {
    const auto dir = scenario_dir(data_dir, split, id);
    const auto log = dataset::read_scenario(dir);
    if (exclude_ego_crash && log.terminated_by == sim::Termination::EgoCollision)
      continue;
    const auto low = dataset::downsample(log, 2.5);
    auto w = dataset::extract_windows(low, 8, 8, stride);
    windows.insert(windows.end(), std::make_move_iterator(w.begin()),
                   std::make_move_iterator(w.end()));
  }
  return windows;
}

}  // namespace vtrackit::pipeline
