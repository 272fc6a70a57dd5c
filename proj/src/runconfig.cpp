#include "vtrackit/runconfig.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace vtrackit::config {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  std::size_t e = s.find_last_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

double to_double(const std::string& v, const std::string& where) {
  try {
    return std::stod(v);
  } catch (...) {
    throw ConfigError("bad number for " + where + ": '" + v + "'");
  }
}

int to_int(const std::string& v, const std::string& where) {
  try {
    return std::stoi(v);
  } catch (...) {
    throw ConfigError("bad integer for " + where + ": '" + v + "'");
  }
}

bool to_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("bad boolean for " + where + ": '" + v + "'");
}

traffic::FuzzBounds::Range to_range(const std::string& v, const std::string& where) {
  const auto parts = split_list(v);
  if (parts.size() != 2) throw ConfigError("expected 'lo,hi' for " + where);
  return {to_double(parts[0], where), to_double(parts[1], where)};
}

}  // namespace

void apply_entry(RunConfig& cfg, const std::string& section, const std::string& key,
                 const std::string& value) {
  const std::string where = section + "." + key;
  if (section == "run") {
    if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
      cfg.seed_set = true;
    } else if (key == "out") {
      cfg.out_dir = value;
    } else {
      throw ConfigError("unknown key " + where);
    }
  } else if (section == "generation") {
    if (key == "maps") {
      cfg.maps.clear();
      for (const auto& name : split_list(value)) {
        auto a = roadnet::archetype_from_string(name);
        if (!a) throw ConfigError("unknown archetype '" + name + "'");
        cfg.maps.push_back(*a);
      }
      if (cfg.maps.empty()) throw ConfigError("generation.maps is empty");
    } else if (key == "scenarios_per_map") {
      cfg.scenarios_per_map = to_int(value, where);
    } else if (key == "n_actors") {
      cfg.n_actors = to_int(value, where);
    } else if (key == "n_aggressive") {
      cfg.n_aggressive = to_int(value, where);
    } else if (key == "n_cautious") {
      cfg.n_cautious = to_int(value, where);
    } else if (key == "workers") {
      cfg.workers = to_int(value, where);
    } else if (key == "duration_s") {
      cfg.duration_s = to_double(value, where);
    } else if (key == "fuzz.min_follow") {
      cfg.fuzz.min_follow_m = to_range(value, where);
    } else if (key == "fuzz.speed_delta") {
      cfg.fuzz.speed_delta_kmph = to_range(value, where);
    } else if (key == "fuzz.p_ignore_vehicles") {
      cfg.fuzz.p_ignore_vehicles = to_range(value, where);
    } else if (key == "fuzz.p_ignore_rules") {
      cfg.fuzz.p_ignore_rules = to_range(value, where);
    } else {
      throw ConfigError("unknown key " + where);
    }
  } else if (section == "training") {
    if (key == "epochs") cfg.epochs = to_int(value, where);
    else if (key == "batch") cfg.batch = to_int(value, where);
    else if (key == "lr") cfg.lr = to_double(value, where);
    else if (key == "k") cfg.k = to_int(value, where);
    else if (key == "lambda_mse") cfg.lambda_mse = to_double(value, where);
    else if (key == "loss_literal_eq8") cfg.loss_literal_eq8 = to_bool(value, where);
    else if (key == "cm_inverse_l1") cfg.cm_inverse_l1 = to_bool(value, where);
    else if (key == "lr_patience") cfg.lr_patience = to_int(value, where);
    else if (key == "train_stride") cfg.train_stride = to_int(value, where);
    else if (key == "eval_stride") cfg.eval_stride = to_int(value, where);
    else throw ConfigError("unknown key " + where);
  } else if (section == "eval") {
    if (key == "ks") {
      cfg.ks.clear();
      for (const auto& v : split_list(value)) cfg.ks.push_back(to_int(v, where));
    } else if (key == "horizons") {
      cfg.horizons.clear();
      for (const auto& v : split_list(value)) cfg.horizons.push_back(to_int(v, where));
    } else if (key == "task") {
      if (value == "AllVehicles") cfg.task = eval::Task::AllVehicles;
      else if (value == "EgoOnly") cfg.task = eval::Task::EgoOnly;
      else throw ConfigError("unknown task '" + value + "'");
    } else if (key == "missrate_per_sample") {
      cfg.missrate_per_sample = to_bool(value, where);
    } else if (key == "bins") {
      cfg.histogram_bins = to_int(value, where);
    } else {
      throw ConfigError("unknown key " + where);
    }
  } else {
    throw ConfigError("unknown section [" + section + "]");
  }
}

RunConfig parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file: " + path);
  RunConfig cfg;
  std::string line, section;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("bad section header at line " + std::to_string(line_no));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value at line " + std::to_string(line_no));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    apply_entry(cfg, section, key, value);
  }
  return cfg;
}

}  // namespace vtrackit::config
