#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "vtrackit/pipeline.hpp"
#include "vtrackit/runconfig.hpp"

using namespace vtrackit;
namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

config::RunConfig tiny_config() {
  config::RunConfig cfg;
  cfg.seed = 42;
  cfg.seed_set = true;
  cfg.maps = {roadnet::Archetype::UrbanLow, roadnet::Archetype::Hybrid};
  cfg.scenarios_per_map = 5;
  cfg.n_actors = 8;
  cfg.duration_s = 6.0;
  cfg.workers = 2;
  return cfg;
}

}  // namespace

TEST_CASE("config files parse with sections, lists and overrides") {
  const std::string path = "cli_test_config.ini";
  {
    std::ofstream f(path);
    f << "# comment\n"
      << "[run]\n"
      << "seed = 7\n"
      << "out = some/dir\n"
      << "[generation]\n"
      << "maps = UrbanLow, Highway\n"
      << "scenarios_per_map = 3\n"
      << "fuzz.speed_delta = -5, 5\n"
      << "[training]\n"
      << "epochs = 17\n"
      << "loss_literal_eq8 = true\n"
      << "[eval]\n"
      << "ks = 1, 5\n"
      << "task = EgoOnly\n";
  }
  auto cfg = config::parse_file(path);
  CHECK(cfg.seed == 7);
  CHECK(cfg.seed_set);
  CHECK(cfg.out_dir == "some/dir");
  REQUIRE(cfg.maps.size() == 2);
  CHECK(cfg.maps[1] == roadnet::Archetype::Highway);
  CHECK(cfg.scenarios_per_map == 3);
  CHECK(cfg.fuzz.speed_delta_kmph.lo == -5);
  CHECK(cfg.epochs == 17);
  CHECK(cfg.loss_literal_eq8);
  CHECK(cfg.ks == std::vector<int>{1, 5});
  CHECK(cfg.task == eval::Task::EgoOnly);

  config::apply_entry(cfg, "training", "epochs", "99");
  CHECK(cfg.epochs == 99);

  CHECK_THROWS_AS(config::apply_entry(cfg, "training", "nope", "1"),
                  config::ConfigError);
  CHECK_THROWS_AS(config::apply_entry(cfg, "generation", "maps", "Atlantis"),
                  config::ConfigError);
}

TEST_CASE("generate writes the expected tree and proportional splits") {
  const std::string out = "cli_test_data";
  fs::remove_all(out);
  auto cfg = tiny_config();
  const auto summary = pipeline::generate_dataset(cfg, out);

  CHECK(summary.total == 10);
  CHECK(summary.splits.train.size() == 6);
  CHECK(summary.splits.val.size() == 2);
  CHECK(summary.splits.test.size() == 2);
  CHECK(fs::exists(out + "/splits.json"));

  int dirs = 0;
  for (const char* split : {"train", "val", "test"}) {
    if (!fs::exists(out + "/" + split)) continue;
    for (const auto& e : fs::directory_iterator(out + "/" + split)) {
      CHECK(fs::exists(e.path() / "frames.csv"));
      CHECK(fs::exists(e.path() / "meta.json"));
      ++dirs;
    }
  }
  CHECK(dirs == 10);
}

TEST_CASE("generation is byte-identical across reruns and worker counts") {
  const std::string out1 = "cli_test_data_a";
  const std::string out2 = "cli_test_data_b";
  fs::remove_all(out1);
  fs::remove_all(out2);

  auto cfg = tiny_config();
  cfg.workers = 1;
  pipeline::generate_dataset(cfg, out1);
  cfg.workers = 4;
  pipeline::generate_dataset(cfg, out2);

  int compared = 0;
  for (auto& e : fs::recursive_directory_iterator(out1)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), out1);
    CHECK(read_file(e.path().string()) == read_file((fs::path(out2) / rel).string()));
    ++compared;
  }
  CHECK(compared == 21);  // 10 scenarios x 2 files + splits.json
}

TEST_CASE("windows load through the split plumbing") {
  const std::string out = "cli_test_data";
  if (!fs::exists(out + "/splits.json")) {
    pipeline::generate_dataset(tiny_config(), out);
  }
  const auto train = pipeline::load_windows(out, "train", 4, true);
  const auto test = pipeline::load_windows(out, "test", 16, false);
  // 6 s scenarios: 121 raw steps -> 16 downsampled -> 1 eval window each
  CHECK(!train.empty());
  CHECK(!test.empty());
  CHECK_THROWS(pipeline::load_windows(out, "banana", 1, false));
}
