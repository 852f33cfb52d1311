#pragma once

// Experiment configuration: a small TOML-style key/value format.
//
//   # comment
//   [section]
//   key = 1.5
//   name = "text"
//   list = ["a", "b"]
//
// One file describes one full experiment. Unknown sections or keys are
// rejected so typos surface as config errors.

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "objnav/agent.hpp"
#include "objnav/errors.hpp"
#include "objnav/scene.hpp"
#include "objnav/sensor.hpp"
#include "objnav/shaping.hpp"

namespace objnav {

class KeyValueDoc {
 public:
  static KeyValueDoc parse(std::istream& in) {
    KeyValueDoc doc;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      line = trim(strip_comment(line));
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError(fmt::format("config line {}: unterminated section header", lineno));
        section = trim(line.substr(1, line.size() - 2));
        if (section.empty()) throw ConfigError(fmt::format("config line {}: empty section name", lineno));
        doc.sections_.insert(section);
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError(fmt::format("config line {}: expected key = value", lineno));
      const auto key = trim(line.substr(0, eq));
      const auto value = trim(line.substr(eq + 1));
      if (key.empty() || value.empty()) throw ConfigError(fmt::format("config line {}: empty key or value", lineno));
      const auto full = section.empty() ? key : section + "." + key;
      if (!doc.values_.emplace(full, value).second)
        throw ConfigError(fmt::format("config line {}: duplicate key '{}'", lineno, full));
    }
    return doc;
  }

  static KeyValueDoc parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  bool has_section(const std::string& s) const { return sections_.count(s) != 0; }
  const std::set<std::string>& sections() const { return sections_; }

  std::optional<std::string> raw(const std::string& key) const {
    used_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    const auto v = raw(key);
    return v ? to_double(key, *v) : fallback;
  }
  long long get_int(const std::string& key, long long fallback) const {
    const auto v = raw(key);
    return v ? to_int(key, *v) : fallback;
  }
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto v = raw(key);
    return v ? to_u64(key, *v) : fallback;
  }
  std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto v = raw(key);
    return v ? to_string_value(key, *v) : fallback;
  }
  std::vector<std::string> get_string_list(const std::string& key) const {
    const auto v = raw(key);
    std::vector<std::string> out;
    if (!v) return out;
    for (const auto& item : split_list(key, *v)) out.push_back(to_string_value(key, item));
    return out;
  }
  std::vector<double> get_double_list(const std::string& key) const {
    const auto v = raw(key);
    std::vector<double> out;
    if (!v) return out;
    for (const auto& item : split_list(key, *v)) out.push_back(to_double(key, item));
    return out;
  }
  std::vector<std::uint64_t> get_u64_list(const std::string& key) const {
    const auto v = raw(key);
    std::vector<std::uint64_t> out;
    if (!v) return out;
    for (const auto& item : split_list(key, *v)) out.push_back(to_u64(key, item));
    return out;
  }

  /// Keys present in the file but never read.
  std::vector<std::string> unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
      if (!used_.count(k)) out.push_back(k);
    return out;
  }

 private:
  static std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
  }
  static std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"') quoted = !quoted;
      if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
  }
  static double to_double(const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw ConfigError(fmt::format("config key '{}': expected a number, got '{}'", key, v));
  }
  static long long to_int(const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      const long long d = std::stoll(v, &used);
      if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw ConfigError(fmt::format("config key '{}': expected an integer, got '{}'", key, v));
  }
  static std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      if (!v.empty() && v.front() != '-') {
        const auto d = std::stoull(v, &used);
        if (used == v.size()) return d;
      }
    } catch (const std::exception&) {
    }
    throw ConfigError(fmt::format("config key '{}': expected an unsigned integer, got '{}'", key, v));
  }
  static std::string to_string_value(const std::string& key, const std::string& v) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    throw ConfigError(fmt::format("config key '{}': expected a quoted string, got '{}'", key, v));
  }
  static std::vector<std::string> split_list(const std::string& key, const std::string& v) {
    if (v.size() < 2 || v.front() != '[' || v.back() != ']')
      throw ConfigError(fmt::format("config key '{}': expected a [list]", key));
    std::vector<std::string> items;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
      const char ch = v[i];
      if (ch == '"') quoted = !quoted;
      if (ch == ',' && !quoted) {
        items.push_back(trim(cur));
        cur.clear();
      } else {
        cur += ch;
      }
    }
    if (!trim(cur).empty() || !items.empty()) items.push_back(trim(cur));
    for (const auto& it : items)
      if (it.empty()) throw ConfigError(fmt::format("config key '{}': empty list element", key));
    return items;
  }

  std::map<std::string, std::string> values_;
  std::set<std::string> sections_;
  mutable std::set<std::string> used_;
};

struct ExperimentConfig {
  GenParams scene;
  int corpus_size = 10;
  std::uint64_t corpus_seed = 1;
  Camera camera;
  RewardSpec reward;                             // shared values
  std::map<RewardMode, RewardSpec> mode_rewards;  // resolved per mode
  TrainConfig train;
  int log_every = 1000;
  int eval_episodes_per_scene = 50;
  std::uint64_t eval_seed = 1;
  std::vector<std::uint64_t> run_seeds{1, 2, 3, 4, 5};
  std::vector<int> l_mins{1, 5};
  std::filesystem::path output_dir = "out";
  int jobs = 1;

  const RewardSpec& reward_for(RewardMode m) const { return mode_rewards.at(m); }
};

namespace detail {

inline std::vector<ClassSpec> read_classes(const KeyValueDoc& doc, const std::string& prefix, bool with_near) {
  const auto names = doc.get_string_list("scene." + prefix + "_classes");
  const auto heights = doc.get_double_list("scene." + prefix + "_heights");
  if (names.size() != heights.size())
    throw ConfigError(fmt::format("scene.{}_classes and scene.{}_heights differ in length", prefix, prefix));
  std::vector<std::string> near;
  if (with_near) {
    near = doc.get_string_list("scene." + prefix + "_near");
    if (!near.empty() && near.size() != names.size())
      throw ConfigError(fmt::format("scene.{}_near must match scene.{}_classes in length", prefix, prefix));
  }
  std::vector<ClassSpec> out;
  for (std::size_t i = 0; i < names.size(); ++i)
    out.push_back({names[i], heights[i], near.empty() ? std::string{} : near[i]});
  return out;
}

inline RewardSpec read_reward(const KeyValueDoc& doc, const std::string& section, RewardSpec base) {
  base.r_t = doc.get_double(section + ".r_t", base.r_t);
  base.step_penalty = doc.get_double(section + ".step_penalty", base.step_penalty);
  base.k = doc.get_double(section + ".k", base.k);
  base.m = doc.get_double(section + ".m", base.m);
  base.c = doc.get_double(section + ".c", base.c);
  base.parent_threshold = doc.get_double(section + ".parent_threshold_m", base.parent_threshold);
  base.d_success = doc.get_double(section + ".d_success_m", base.d_success);
  base.failure_reward = doc.get_double(section + ".failure_reward", base.failure_reward);
  return base;
}

}  // namespace detail

inline ExperimentConfig load_config(const KeyValueDoc& doc) {
  static const std::set<std::string> kSections{"experiment", "scene",      "camera",       "reward",      "reward.bin",
                                               "reward.base", "reward.depth", "reward.area", "train", "eval"};
  for (const auto& s : doc.sections())
    if (!kSections.count(s)) throw ConfigError(fmt::format("unknown config section [{}]", s));

  ExperimentConfig cfg;
  cfg.output_dir = doc.get_string("experiment.output_dir", "out");
  if (doc.has("experiment.run_seeds")) cfg.run_seeds = doc.get_u64_list("experiment.run_seeds");
  if (cfg.run_seeds.empty()) throw ConfigError("experiment.run_seeds must not be empty");
  cfg.jobs = static_cast<int>(doc.get_int("experiment.jobs", 1));
  cfg.log_every = static_cast<int>(doc.get_int("experiment.log_every", 1000));

  auto& sp = cfg.scene;
  sp.width = static_cast<int>(doc.get_int("scene.width", sp.width));
  sp.height = static_cast<int>(doc.get_int("scene.height", sp.height));
  sp.cell_size = doc.get_double("scene.cell_size", sp.cell_size);
  sp.n_targets = static_cast<int>(doc.get_int("scene.n_targets", sp.n_targets));
  sp.n_parents = static_cast<int>(doc.get_int("scene.n_parents", sp.n_parents));
  sp.n_distractors = static_cast<int>(doc.get_int("scene.n_distractors", sp.n_distractors));
  sp.rho = doc.get_double("scene.rho", sp.rho);
  sp.wall_segments = static_cast<int>(doc.get_int("scene.wall_segments", sp.wall_segments));
  sp.max_attempts = static_cast<int>(doc.get_int("scene.max_attempts", sp.max_attempts));
  sp.target_classes = detail::read_classes(doc, "target", true);
  sp.parent_classes = detail::read_classes(doc, "parent", false);
  sp.distractor_classes = detail::read_classes(doc, "distractor", false);
  cfg.corpus_size = static_cast<int>(doc.get_int("scene.corpus_size", cfg.corpus_size));
  cfg.corpus_seed = doc.get_u64("scene.corpus_seed", cfg.corpus_seed);
  if (cfg.corpus_size < 1) throw ConfigError("scene.corpus_size must be >= 1");
  validate(sp);

  auto& cam = cfg.camera;
  cam.horizontal_fov_deg = doc.get_double("camera.fov_deg", cam.horizontal_fov_deg);
  cam.columns = static_cast<int>(doc.get_int("camera.columns", cam.columns));
  cam.rows = static_cast<int>(doc.get_int("camera.rows", cam.rows));
  cam.max_range = doc.get_double("camera.max_range", cam.max_range);
  validate(cam);

  cfg.reward = detail::read_reward(doc, "reward", {});
  if (doc.has("reward.mode")) cfg.reward.mode = reward_mode_from_string(doc.get_string("reward.mode", "bin"));
  for (auto mode : kAllModes) {
    const auto section = std::string("reward.") + to_string(mode);
    auto spec = detail::read_reward(doc, section, cfg.reward);
    if (doc.has(section + ".mode") && reward_mode_from_string(doc.get_string(section + ".mode", "")) != mode)
      throw ConfigError(fmt::format("[{}] sets a different mode", section));
    spec.mode = mode;
    if (spec.d_success != cfg.reward.d_success)
      throw ConfigError("d_success_m must be shared by all modes (it defines the goal, not the reward)");
    validate(spec);
    cfg.mode_rewards[mode] = spec;
  }

  auto& tc = cfg.train;
  tc.episodes = static_cast<int>(doc.get_int("train.episodes", tc.episodes));
  tc.max_steps = static_cast<int>(doc.get_int("train.max_steps", tc.max_steps));
  tc.alpha = doc.get_double("train.alpha", tc.alpha);
  tc.gamma = doc.get_double("train.gamma", tc.gamma);
  tc.epsilon_start = doc.get_double("train.epsilon_start", tc.epsilon_start);
  tc.epsilon_end = doc.get_double("train.epsilon_end", tc.epsilon_end);
  tc.epsilon_decay_episodes = static_cast<int>(doc.get_int("train.epsilon_decay_episodes", tc.epsilon_decay_episodes));
  validate(tc);

  cfg.eval_episodes_per_scene = static_cast<int>(doc.get_int("eval.episodes_per_scene", cfg.eval_episodes_per_scene));
  cfg.eval_seed = doc.get_u64("eval.seed", cfg.eval_seed);
  if (cfg.eval_episodes_per_scene < 1) throw ConfigError("eval.episodes_per_scene must be >= 1");
  if (cfg.jobs < 1) throw ConfigError("experiment.jobs must be >= 1");

  const auto unused = doc.unused_keys();
  if (!unused.empty()) throw ConfigError(fmt::format("unknown config key '{}'", unused.front()));
  return cfg;
}

inline ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
  const auto doc = KeyValueDoc::parse(in);
  return load_config(doc);
}

}  // namespace objnav
