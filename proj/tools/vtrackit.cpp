#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "vtrackit/dataset.hpp"
#include "vtrackit/eval.hpp"
#include "vtrackit/models.hpp"
#include "vtrackit/pipeline.hpp"
#include "vtrackit/raster.hpp"
#include "vtrackit/report.hpp"
#include "vtrackit/runconfig.hpp"
#include "vtrackit/scenario.hpp"

namespace fs = std::filesystem;
using namespace vtrackit;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> sets;
  long long seed = -1;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "run configuration file");
  cmd->add_option("--set", args.sets,
                  "override a config entry, e.g. --set training.epochs=50");
  cmd->add_option("--seed", args.seed, "global seed (overrides config and VTRACK_SEED)");
  cmd->add_option("--out", args.out_dir, "output directory");
}

config::RunConfig resolve_config(const CommonArgs& args) {
  config::RunConfig cfg;
  if (!args.config_path.empty()) cfg = config::parse_file(args.config_path);
  for (const std::string& s : args.sets) {
    const auto dot = s.find('.');
    const auto eq = s.find('=');
    if (dot == std::string::npos || eq == std::string::npos || eq < dot)
      throw config::ConfigError("bad --set entry (want section.key=value): " + s);
    config::apply_entry(cfg, s.substr(0, dot), s.substr(dot + 1, eq - dot - 1),
                        s.substr(eq + 1));
  }
  if (args.seed >= 0) {
    cfg.seed = static_cast<std::uint64_t>(args.seed);
    cfg.seed_set = true;
  }
  if (!cfg.seed_set) {
    if (const char* env = std::getenv("VTRACK_SEED")) {
      cfg.seed = std::strtoull(env, nullptr, 10);
      cfg.seed_set = true;
    }
  }
  if (!cfg.seed_set)
    throw config::ConfigError(
        "no seed: set run.seed in the config, pass --seed, or export VTRACK_SEED");
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  return cfg;
}

int cmd_generate(const CommonArgs& common) {
  const auto cfg = resolve_config(common);
  const auto summary = pipeline::generate_dataset(cfg, cfg.out_dir);
  std::cout << "generated " << summary.total << " scenarios into " << cfg.out_dir
            << "\n";
  std::cout << "splits: train=" << summary.splits.train.size()
            << " val=" << summary.splits.val.size()
            << " test=" << summary.splits.test.size() << "\n";
  std::cout << "ego crashes: " << summary.ego_crashes << "\n";
  for (const auto& [name, count] : summary.per_map)
    std::cout << "  " << name << ": " << count << "\n";
  return 0;
}

models::TrainConfig train_config_from(const config::RunConfig& cfg) {
  models::TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.batch = cfg.batch;
  tc.lr = cfg.lr;
  tc.k = cfg.k;
  tc.lambda_mse = cfg.lambda_mse;
  tc.seed = cfg.seed;
  tc.loss_literal_eq8 = cfg.loss_literal_eq8;
  tc.cm_inverse_l1 = cfg.cm_inverse_l1;
  tc.lr_patience = cfg.lr_patience;
  return tc;
}

int cmd_train(const CommonArgs& common, const std::string& model,
              const std::string& data_dir, const std::string& tgan_ckpt) {
  const auto cfg = resolve_config(common);
  fs::create_directories(cfg.out_dir);

  std::cout << "loading windows from " << data_dir << "...\n";
  const auto train = pipeline::load_windows(data_dir, "train", cfg.train_stride, true);
  const auto val = pipeline::load_windows(data_dir, "val", cfg.eval_stride, true);
  if (train.empty()) {
    std::cerr << "error: no training windows in " << data_dir << "\n";
    return 1;
  }
  std::cout << "train windows: " << train.size() << ", val windows: " << val.size()
            << "\n";
  const auto stats = dataset::FeatureStats::fit(train);
  stats.save(cfg.out_dir + "/stats.json");

  const auto tc = train_config_from(cfg);
  std::vector<models::EpochStat> curve;
  auto progress = [](const models::EpochStat& s) {
    std::cout << "epoch " << s.epoch << " total " << s.total;
    if (s.val_min_ade > 0) std::cout << " val_minADE " << s.val_min_ade;
    std::cout << "\n";
  };

  try {
    if (model == "tgan") {
      const auto tgan = models::tgan_train(train, stats, tc, &curve, progress);
      tgan.save(cfg.out_dir + "/tgan.ckpt");
      report::write_losses_csv(curve, cfg.out_dir + "/tgan_losses.csv");
      std::cout << "saved " << cfg.out_dir << "/tgan.ckpt\n";
    } else if (model == "infragan") {
      std::string ckpt = tgan_ckpt;
      if (ckpt.empty()) ckpt = cfg.out_dir + "/tgan.ckpt";
      if (!fs::exists(ckpt)) {
        std::cerr << "error: pretrained TGAN required (checkpoint not found: " << ckpt
                  << ")\n";
        return 1;
      }
      const auto tgan = models::TganModel::load(ckpt);
      const auto infra = models::infragan_train(train, val, stats, tgan, tc, &curve,
                                                progress);
      infra.save(cfg.out_dir + "/infragan.ckpt");
      report::write_losses_csv(curve, cfg.out_dir + "/infragan_losses.csv");
      std::cout << "saved " << cfg.out_dir << "/infragan.ckpt\n";
    } else {
      std::cerr << "error: unknown model '" << model << "' (want tgan or infragan)\n";
      return 1;
    }
  } catch (const models::Diverged& d) {
    std::cerr << "error: " << d.what() << "\n";
    return 1;
  }
  return 0;
}

struct LoadedPredictor {
  std::string tag;
  models::TganModel tgan;
  models::InfraganModel infragan;
  bool is_infra = false;

  eval::PredictFn fn(const dataset::FeatureStats& stats) const {
    if (is_infra) return eval::model_predictor(infragan.gen, &infragan.cm, stats);
    return eval::model_predictor(tgan.gen, nullptr, stats);
  }
};

LoadedPredictor load_predictor(const std::string& path) {
  LoadedPredictor p;
  p.tag = fs::path(path).stem().string();
  try {
    p.infragan = models::InfraganModel::load(path);
    p.is_infra = true;
    return p;
  } catch (const std::exception&) {
  }
  p.tgan = models::TganModel::load(path);
  p.is_infra = false;
  return p;
}

int cmd_eval(const CommonArgs& common, const std::string& data_dir,
             const std::string& checkpoint, const std::string& stats_path,
             bool oracle, const std::vector<std::string>& compare,
             const std::vector<int>& tables) {
  const auto cfg = resolve_config(common);
  fs::create_directories(cfg.out_dir);

  if (!fs::exists(data_dir + "/splits.json")) {
    std::cerr << "error: missing split (no splits.json in " << data_dir << ")\n";
    return 1;
  }
  const auto test = pipeline::load_windows(data_dir, "test", cfg.eval_stride, false);
  if (test.empty()) {
    std::cerr << "error: missing split (no test windows in " << data_dir << ")\n";
    return 1;
  }

  eval::BenchmarkOptions opts;
  opts.ks = cfg.ks;
  opts.horizons = cfg.horizons;
  opts.task = cfg.task;
  opts.missrate_per_sample = cfg.missrate_per_sample;
  opts.seed = cfg.seed;

  dataset::FeatureStats stats;
  auto resolve_stats = [&](const std::string& ckpt) {
    if (!stats_path.empty()) return dataset::FeatureStats::load(stats_path);
    const auto next_to_ckpt = fs::path(ckpt).parent_path() / "stats.json";
    if (fs::exists(next_to_ckpt)) return dataset::FeatureStats::load(next_to_ckpt.string());
    throw std::runtime_error("no stats.json found; pass --stats");
  };

  struct Run {
    std::string tag;
    eval::MetricReport rep;
  };
  std::vector<Run> runs;
  std::vector<LoadedPredictor> keep_alive;

  if (oracle) {
    eval::MetricReport rep = eval::benchmark(eval::oracle_predictor(), test, opts);
    rep.model_tag = "oracle";
    rep.split = "test";
    runs.push_back({"oracle", std::move(rep)});
  } else if (!compare.empty()) {
    if (compare.size() != 2) {
      std::cerr << "error: --compare takes exactly two checkpoints\n";
      return 1;
    }
    for (const auto& path : compare) {
      if (!fs::exists(path)) {
        std::cerr << "error: missing checkpoint " << path << "\n";
        return 1;
      }
      keep_alive.push_back(load_predictor(path));
    }
    stats = resolve_stats(compare[0]);
    for (auto& p : keep_alive) {
      eval::MetricReport rep = eval::benchmark(p.fn(stats), test, opts);
      rep.model_tag = p.tag;
      rep.split = "test";
      runs.push_back({p.tag, std::move(rep)});
    }
  } else {
    if (checkpoint.empty() || !fs::exists(checkpoint)) {
      std::cerr << "error: missing checkpoint " << checkpoint << "\n";
      return 1;
    }
    keep_alive.push_back(load_predictor(checkpoint));
    stats = resolve_stats(checkpoint);
    eval::MetricReport rep = eval::benchmark(keep_alive[0].fn(stats), test, opts);
    rep.model_tag = keep_alive[0].tag;
    rep.split = "test";
    runs.push_back({keep_alive[0].tag, std::move(rep)});
  }

  std::vector<int> wanted = tables;
  if (wanted.empty()) wanted = {6, 7, 8, 9};
  std::string text;
  for (const auto& run : runs) {
    for (int t : wanted) {
      switch (t) {
        case 6:
          text += report::format_topk_table(run.rep, run.tag + ": top-k predictions");
          break;
        case 7:
          text += report::format_map_table(run.rep, run.tag + ": per map");
          break;
        case 8:
          text += report::format_horizon_table(run.rep, run.tag + ": per horizon");
          break;
        case 9:
          text += report::format_topk_table(run.rep,
                                            run.tag + ": ego-only top-k predictions");
          break;
        default:
          std::cerr << "error: unknown table " << t << "\n";
          return 1;
      }
      text += "\n";
    }
    report::write_text(report::report_to_json(run.rep),
                       cfg.out_dir + "/report_" + run.tag + ".json");
  }
  report::write_text(text, cfg.out_dir + "/report.txt");
  std::cout << text;

  // error histograms; with two runs, overlay them as Before/After
  double hi = 1.0;
  for (const auto& run : runs)
    for (double v : run.rep.best_fde_values) hi = std::max(hi, v);
  for (const char* which : {"ade", "fde"}) {
    std::vector<report::HistogramSeries> series;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const auto& values = std::string(which) == "ade" ? runs[i].rep.best_ade_values
                                                       : runs[i].rep.best_fde_values;
      std::string label = runs.size() == 2 ? (i == 0 ? "Before" : "After") : runs[i].tag;
      series.push_back({label, report::make_histogram(values, cfg.histogram_bins, 0.0,
                                                      hi * 1.0001)});
    }
    const std::string stem = cfg.out_dir + "/hist_" + which;
    report::write_text(report::histogram_csv(series), stem + ".csv");
    report::write_text(report::histogram_svg(series, std::string(which) + " distribution",
                                             std::string(which) + " (m)"),
                       stem + ".svg");
  }
  std::cout << "reports written to " << cfg.out_dir << "\n";
  return 0;
}

int cmd_inspect(const std::string& scenario_path, int head) {
  const auto log = dataset::read_scenario(scenario_path);
  dataset::validate_log(log);
  std::cout << "scenario " << log.scenario_id << " on "
            << roadnet::to_string(log.archetype) << " (map seed " << log.map_seed
            << ")\n";
  std::cout << "weather " << sim::to_string(log.weather.preset) << ", friction "
            << log.weather.friction << ", limit scale " << log.weather.limit_scale
            << "\n";
  std::cout << "fps " << log.fps << ", timesteps " << log.timestep_count()
            << ", records " << log.frames.size() << ", ended by "
            << sim::to_string(log.terminated_by) << "\n";
  std::cout << "collisions " << log.collisions.size() << "\n";
  std::cout << "schema: " << dataset::kColumnCount << " columns, all records valid\n";
  std::cout << dataset::header_line() << "\n";
  for (int i = 0; i < std::min<int>(head, static_cast<int>(log.frames.size())); ++i)
    std::cout << dataset::format_record(log.frames[static_cast<std::size_t>(i)]) << "\n";
  return 0;
}

int cmd_raster(const std::string& scenario_path, const std::string& out_png) {
  const auto log = dataset::read_scenario(scenario_path);
  const auto map = roadnet::generate_map(log.archetype, log.map_seed);
  raster::render_scenario(map, log, out_png);
  std::cout << "wrote " << out_png << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic driving scenarios with infrastructure annotations, plus "
               "trajectory-prediction training and benchmarks"};
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, eval_args;
  std::string train_model = "tgan", train_data, train_tgan_ckpt;
  std::string eval_data, eval_ckpt, eval_stats;
  bool eval_oracle = false;
  std::vector<std::string> eval_compare;
  std::vector<int> eval_tables;
  std::string inspect_path, raster_path, raster_out = "scenario.png";
  int inspect_head = 5;

  auto* gen = app.add_subcommand("generate", "generate a scenario dataset");
  add_common(gen, gen_args);

  auto* train = app.add_subcommand("train", "train tgan or infragan");
  add_common(train, train_args);
  train->add_option("--model", train_model, "tgan | infragan");
  train->add_option("--data", train_data, "dataset directory")->required();
  train->add_option("--tgan-ckpt", train_tgan_ckpt,
                    "pretrained TGAN checkpoint (infragan only)");

  auto* evalc = app.add_subcommand("eval", "benchmark a checkpoint on the test split");
  add_common(evalc, eval_args);
  evalc->add_option("--data", eval_data, "dataset directory")->required();
  evalc->add_option("--checkpoint", eval_ckpt, "model checkpoint");
  evalc->add_option("--stats", eval_stats, "stats.json path");
  evalc->add_flag("--oracle", eval_oracle, "evaluate a ground-truth oracle");
  evalc->add_option("--compare", eval_compare,
                    "two checkpoints for a Before/After comparison");
  evalc->add_option("--tables", eval_tables, "which tables to print (6 7 8 9)");

  auto* inspect = app.add_subcommand("inspect", "validate and preview a scenario");
  inspect->add_option("scenario", inspect_path, "scenario directory")->required();
  inspect->add_option("--head", inspect_head, "rows to print");

  auto* rasterc = app.add_subcommand("raster", "render a scenario to PNG");
  rasterc->add_option("scenario", raster_path, "scenario directory")->required();
  rasterc->add_option("--out", raster_out, "output PNG path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate(gen_args);
    if (train->parsed())
      return cmd_train(train_args, train_model, train_data, train_tgan_ckpt);
    if (evalc->parsed())
      return cmd_eval(eval_args, eval_data, eval_ckpt, eval_stats, eval_oracle,
                      eval_compare, eval_tables);
    if (inspect->parsed()) return cmd_inspect(inspect_path, inspect_head);
    if (rasterc->parsed()) return cmd_raster(raster_path, raster_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
