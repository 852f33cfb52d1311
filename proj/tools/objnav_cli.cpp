// objnav: generate scene corpora, fit the closeness table, train and evaluate
// tabular agents under each reward function, and print the comparison report.
//
// Exit codes: 0 success, 1 config error, 2 data error, 3 internal invariant violation.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "objnav/objnav.hpp"

namespace {

struct CommonOptions {
  std::string config;
  std::optional<int> jobs;
  std::optional<std::string> out;
};

objnav::ExperimentConfig load(const CommonOptions& o) {
  auto cfg = objnav::load_config_file(o.config);
  if (o.jobs) {
    if (*o.jobs < 1) throw objnav::ConfigError("--jobs must be >= 1");
    cfg.jobs = *o.jobs;
  }
  if (o.out) cfg.output_dir = *o.out;
  return cfg;
}

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config, "experiment config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("-j,--jobs", o.jobs, "parallel workers for train/eval");
  cmd->add_option("-o,--out", o.out, "output directory (overrides experiment.output_dir)");
}

objnav::Heading parse_heading(const std::string& s) {
  if (s.size() != 1) throw objnav::ConfigError("heading must be one of N, E, S, W");
  try {
    return objnav::heading_from_char(s[0]);
  } catch (const objnav::DataError&) {
    throw objnav::ConfigError("heading must be one of N, E, S, W");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Object-goal navigation reward shaping lab"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string mode_name;
  const auto add_mode = [&](CLI::App* cmd) {
    cmd->add_option("-m,--mode", mode_name, "reward function")
        ->required()
        ->check(CLI::IsMember({"bin", "base", "depth", "area"}));
  };

  auto* gen = app.add_subcommand("gen", "generate the scene corpus and manifest");
  add_common(gen, opts);
  auto* closeness = app.add_subcommand("closeness", "fit Pr(target|parent) from the corpus");
  add_common(closeness, opts);
  auto* train = app.add_subcommand("train", "train one Q-table per (scene, run seed)");
  add_common(train, opts);
  add_mode(train);
  auto* eval = app.add_subcommand("eval", "greedy evaluation over the shared episode set");
  add_common(eval, opts);
  add_mode(eval);
  auto* report = app.add_subcommand("report", "SR / SPL comparison across reward functions");
  add_common(report, opts);
  auto* run = app.add_subcommand("run", "gen, closeness, train + eval for all modes, report");
  add_common(run, opts);

  auto* render = app.add_subcommand("render", "render one pose of a corpus scene");
  add_common(render, opts);
  std::size_t scene_index = 0;
  int px = 0, py = 0;
  std::string heading = "N";
  bool dump_json = false;
  render->add_option("--scene", scene_index, "scene index in the corpus");
  render->add_option("--x", px)->required();
  render->add_option("--y", py)->required();
  render->add_option("--heading", heading, "N, E, S or W");
  render->add_flag("--dump-json", dump_json, "print the full observation (depth + detections) as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    const auto cfg = load(opts);
    if (*gen) {
      const auto scenes = objnav::cmd_gen(cfg);
      fmt::print("wrote {} scenes to {}\n", scenes.size(), objnav::Paths{cfg.output_dir}.scenes().string());
    } else if (*closeness) {
      const auto table = objnav::cmd_closeness(cfg);
      std::cout << objnav::closeness_csv(table);
    } else if (*train) {
      const auto mode = objnav::reward_mode_from_string(mode_name);
      const auto outputs = objnav::cmd_train(cfg, mode);
      fmt::print("trained {} tables ({} mode)\n", outputs.size(), mode_name);
    } else if (*eval) {
      const auto mode = objnav::reward_mode_from_string(mode_name);
      const auto rows = objnav::cmd_eval(cfg, mode);
      fmt::print("evaluated {} episodes ({} mode)\n", rows.size(), mode_name);
    } else if (*report) {
      std::cout << objnav::cmd_report(cfg).table.text;
    } else if (*run) {
      std::cout << objnav::run_all(cfg).table.text;
    } else if (*render) {
      const auto scenes = objnav::load_corpus(cfg);
      if (scene_index >= scenes.size()) throw objnav::ConfigError("--scene out of range");
      const auto& scene = scenes[scene_index];
      const objnav::AgentPose pose{px, py, parse_heading(heading)};
      if (!scene.is_free(pose.x, pose.y)) throw objnav::ConfigError("pose must be on a free cell");
      const auto obs = objnav::render(scene, pose, cfg.camera);
      if (dump_json) {
        std::cout << objnav::observation_to_json(obs).dump() << "\n";
      } else {
        for (const auto& d : obs.detections)
          fmt::print("{} {} ({}) bbox=[{},{},{},{}] area={} depth={:.3f}\n", d.object_id, d.class_name,
                     objnav::to_string(d.role), d.bbox.col_min, d.bbox.row_min, d.bbox.col_max, d.bbox.row_max,
                     d.area, d.mean_depth);
      }
    }
  } catch (const objnav::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const objnav::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const objnav::InvariantError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
