#pragma once

// The experiment pipeline behind the CLI: gen -> closeness -> train -> eval
// -> report. Every stage is a pure function of the config and the files the
// previous stages wrote.
//
// Output layout under cfg.output_dir:
//   scenes/scene_NNN.json, scenes/manifest.csv
//   closeness.csv
//   checkpoints/<mode>/scene_NNN_seed_S.json
//   logs/<mode>/scene_NNN_seed_S.csv
//   results.csv
//   report.csv, report_table.txt, report_table.csv

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "objnav/agent.hpp"
#include "objnav/closeness.hpp"
#include "objnav/config.hpp"
#include "objnav/errors.hpp"
#include "objnav/eval.hpp"
#include "objnav/scene.hpp"

namespace objnav {

namespace fs = std::filesystem;

/// Runs fn(0..n-1) on up to `jobs` threads. Exceptions are rethrown in index order.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, jobs));
  if (threads == 1 || n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw InvariantError("SHA-256 digest failed");
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot read '{}'", p.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write '{}'", p.string()));
  out << content;
}

struct Paths {
  fs::path root;
  fs::path scenes() const { return root / "scenes"; }
  fs::path manifest() const { return scenes() / "manifest.csv"; }
  fs::path scene_file(std::size_t i) const { return scenes() / fmt::format("scene_{:03d}.json", i); }
  fs::path closeness() const { return root / "closeness.csv"; }
  fs::path checkpoint(RewardMode m, std::size_t scene, std::uint64_t seed) const {
    return root / "checkpoints" / to_string(m) / fmt::format("scene_{:03d}_seed_{}.json", scene, seed);
  }
  fs::path train_log(RewardMode m, std::size_t scene, std::uint64_t seed) const {
    return root / "logs" / to_string(m) / fmt::format("scene_{:03d}_seed_{}.csv", scene, seed);
  }
  fs::path results() const { return root / "results.csv"; }
  fs::path report() const { return root / "report.csv"; }
  fs::path report_text() const { return root / "report_table.txt"; }
  fs::path report_matrix() const { return root / "report_table.csv"; }
};

// ---------------------------------------------------------------------------
// gen

inline std::uint64_t corpus_scene_seed(const ExperimentConfig& cfg, std::size_t i) {
  return derive_seed(cfg.corpus_seed, i);
}

inline std::string scene_file_content(const Scene& s) { return scene_to_json(s).dump(2) + "\n"; }

/// Writes the corpus and manifest (`index,path,sha256`). Returns the scenes.
inline std::vector<Scene> cmd_gen(const ExperimentConfig& cfg) {
  const Paths paths{cfg.output_dir};
  std::vector<Scene> scenes;
  std::string manifest = "index,path,sha256\n";
  for (std::size_t i = 0; i < static_cast<std::size_t>(cfg.corpus_size); ++i) {
    try {
      scenes.push_back(generate_scene(corpus_scene_seed(cfg, i), cfg.scene));
    } catch (const PlacementFailure& e) {
      throw PlacementFailure(fmt::format("scene index {}: {}", i, e.what()));
    }
    const auto content = scene_file_content(scenes.back());
    write_file(paths.scene_file(i), content);
    manifest += fmt::format("{},{},{}\n", i, paths.scene_file(i).filename().string(), sha256_hex(content));
  }
  write_file(paths.manifest(), manifest);
  return scenes;
}

struct ManifestEntry {
  std::size_t index = 0;
  std::string path;
  std::string sha256;
};

inline std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  if (!fs::exists(path)) throw DataError(fmt::format("scene corpus missing: no manifest at '{}'", path.string()));
  std::istringstream in(read_file(path));
  std::string line;
  std::getline(in, line);
  if (line != "index,path,sha256") throw DataError("manifest: bad header");
  std::vector<ManifestEntry> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(','), c2 = line.rfind(',');
    if (c1 == std::string::npos || c1 == c2) throw DataError("manifest: malformed line");
    out.push_back({std::stoul(line.substr(0, c1)), line.substr(c1 + 1, c2 - c1 - 1), line.substr(c2 + 1)});
  }
  return out;
}

/// Loads the corpus, verifying every file against its manifest hash.
inline std::vector<Scene> load_corpus(const ExperimentConfig& cfg) {
  const Paths paths{cfg.output_dir};
  std::vector<Scene> scenes;
  for (const auto& e : read_manifest(paths.manifest())) {
    const auto content = read_file(paths.scenes() / e.path);
    if (sha256_hex(content) != e.sha256) throw DataError(fmt::format("scene file '{}' does not match its manifest hash", e.path));
    try {
      scenes.push_back(scene_from_json(nlohmann::json::parse(content)));
    } catch (const nlohmann::json::exception& ex) {
      throw DataError(fmt::format("scene file '{}': {}", e.path, ex.what()));
    }
  }
  return scenes;
}

// ---------------------------------------------------------------------------
// closeness

inline ClosenessTable cmd_closeness(const ExperimentConfig& cfg) {
  const auto table = fit_closeness(load_corpus(cfg));
  write_file(Paths{cfg.output_dir}.closeness(), closeness_csv(table));
  return table;
}

inline ClosenessTable load_closeness(const ExperimentConfig& cfg) {
  const auto path = Paths{cfg.output_dir}.closeness();
  if (!fs::exists(path)) throw DataError(fmt::format("closeness table missing at '{}'", path.string()));
  std::istringstream in(read_file(path));
  return read_closeness_csv(in);
}

// ---------------------------------------------------------------------------
// train / eval

inline std::vector<std::unique_ptr<SceneContext>> make_contexts(const ExperimentConfig& cfg,
                                                                const std::vector<Scene>& scenes) {
  std::vector<std::unique_ptr<SceneContext>> out(scenes.size());
  parallel_for(scenes.size(), cfg.jobs, [&](std::size_t i) {
    out[i] = std::make_unique<SceneContext>(scenes[i], cfg.camera, cfg.reward.d_success);
  });
  return out;
}

/// Independent of the reward mode, so all modes start from identical randomness.
inline std::uint64_t train_seed(std::uint64_t run_seed, std::size_t scene_index) {
  return derive_seed(run_seed, scene_index, 1);
}

struct TrainOutput {
  std::size_t scene_index = 0;
  std::uint64_t run_seed = 0;
  QTable q;
  std::vector<TrainLogLine> log;
};

inline std::string train_log_csv(const std::vector<TrainLogLine>& log) {
  std::string out = "episode,reward,success\n";
  for (const auto& l : log) out += fmt::format("{},{:.17g},{}\n", l.episode, l.reward, l.success ? 1 : 0);
  return out;
}

/// Trains one table per (scene, run seed) and writes checkpoints and logs.
inline std::vector<TrainOutput> cmd_train(const ExperimentConfig& cfg, RewardMode mode) {
  const auto scenes = load_corpus(cfg);
  const auto table = load_closeness(cfg);
  const auto contexts = make_contexts(cfg, scenes);
  const auto& spec = cfg.reward_for(mode);
  const Paths paths{cfg.output_dir};

  std::vector<TrainOutput> outputs(scenes.size() * cfg.run_seeds.size());
  parallel_for(outputs.size(), cfg.jobs, [&](std::size_t k) {
    const std::size_t i = k / cfg.run_seeds.size();
    const auto run_seed = cfg.run_seeds[k % cfg.run_seeds.size()];
    auto tc = cfg.train;
    tc.seed = train_seed(run_seed, i);
    auto& out = outputs[k];
    out.scene_index = i;
    out.run_seed = run_seed;
    try {
      out.log = train_scene(*contexts[i], spec, table, out.q, tc, cfg.log_every);
    } catch (const UnreachableStart& e) {
      throw UnreachableStart(fmt::format("training aborted: {}", e.what()));
    }
  });
  for (const auto& out : outputs) {
    write_file(paths.checkpoint(mode, out.scene_index, out.run_seed), qtable_to_json(out.q).dump() + "\n");
    write_file(paths.train_log(mode, out.scene_index, out.run_seed), train_log_csv(out.log));
  }
  return outputs;
}

struct EvalEpisode {
  std::size_t scene_index = 0;
  std::string target_class;
  AgentPose start;
};

/// Seeded (scene, start, target) triples, shared by every mode and run seed.
inline std::vector<EvalEpisode> build_eval_set(const ExperimentConfig& cfg,
                                               const std::vector<std::unique_ptr<SceneContext>>& contexts) {
  std::vector<EvalEpisode> out;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    Rng rng(derive_seed(cfg.eval_seed, i, 2));
    const auto targets = contexts[i]->target_classes();
    if (targets.empty()) throw DataError(fmt::format("scene {} has no target", contexts[i]->scene().id()));
    for (int e = 0; e < cfg.eval_episodes_per_scene; ++e) {
      const auto& t = targets[uniform_index(rng, targets.size())];
      out.push_back({i, t, sample_start(*contexts[i], t, rng)});
    }
  }
  return out;
}

inline QTable load_checkpoint(const fs::path& path) {
  if (!fs::exists(path)) throw MissingCheckpoint(fmt::format("checkpoint missing: '{}'", path.string()));
  try {
    return qtable_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("checkpoint '{}': {}", path.string(), e.what()));
  }
}

/// Greedy evaluation of one mode's checkpoints over the shared eval set.
inline std::vector<ResultRow> evaluate_mode(const ExperimentConfig& cfg, RewardMode mode,
                                            const std::vector<std::unique_ptr<SceneContext>>& contexts,
                                            const ClosenessTable& table,
                                            const std::function<QTable(std::size_t, std::uint64_t)>& load_q) {
  const auto eval_set = build_eval_set(cfg, contexts);
  const auto& spec = cfg.reward_for(mode);
  const auto n_scenes = contexts.size();
  std::vector<std::vector<ResultRow>> per_job(cfg.run_seeds.size() * n_scenes);
  parallel_for(per_job.size(), cfg.jobs, [&](std::size_t k) {
    const auto run_seed = cfg.run_seeds[k / n_scenes];
    const std::size_t i = k % n_scenes;
    QTable q = load_q(i, run_seed);
    Rng rng(derive_seed(run_seed, i, 3));
    for (const auto& ep : eval_set) {
      if (ep.scene_index != i) continue;
      auto res = run_episode(*contexts[i], ep.target_class, ep.start, spec, table, q, cfg.train, RunMode::EvalGreedy,
                             0.0, rng);
      per_job[k].push_back({run_seed, mode, std::move(res)});
    }
  });
  std::vector<ResultRow> rows;
  for (auto& v : per_job)
    for (auto& r : v) rows.push_back(std::move(r));
  return rows;
}

/// Rewrites results.csv with this mode's rows replaced; rows stay in
/// (mode, run seed, scene, episode) order.
inline void merge_results(const fs::path& path, RewardMode mode, const std::vector<ResultRow>& rows) {
  std::vector<ResultRow> all;
  if (fs::exists(path)) {
    std::istringstream in(read_file(path));
    for (auto& r : read_results_csv(in))
      if (r.mode != mode) all.push_back(std::move(r));
  }
  all.insert(all.end(), rows.begin(), rows.end());
  std::stable_sort(all.begin(), all.end(),
                   [](const ResultRow& a, const ResultRow& b) { return static_cast<int>(a.mode) < static_cast<int>(b.mode); });
  std::string out = std::string(kResultsHeader) + "\n";
  for (const auto& r : all) out += format_result_row(r) + "\n";
  write_file(path, out);
}

inline std::vector<ResultRow> cmd_eval(const ExperimentConfig& cfg, RewardMode mode) {
  const auto scenes = load_corpus(cfg);
  const auto table = load_closeness(cfg);
  const auto contexts = make_contexts(cfg, scenes);
  const Paths paths{cfg.output_dir};
  // Fail before doing any work if a checkpoint is missing.
  for (std::size_t i = 0; i < scenes.size(); ++i)
    for (auto seed : cfg.run_seeds)
      if (!fs::exists(paths.checkpoint(mode, i, seed)))
        throw MissingCheckpoint(fmt::format("checkpoint missing: '{}'", paths.checkpoint(mode, i, seed).string()));
  auto rows = evaluate_mode(cfg, mode, contexts, table, [&](std::size_t i, std::uint64_t seed) {
    return load_checkpoint(paths.checkpoint(mode, i, seed));
  });
  merge_results(paths.results(), mode, rows);
  return rows;
}

// ---------------------------------------------------------------------------
// report

struct ReportOutput {
  CellMap cells;
  std::vector<MetricReport> reports;
  RenderedTable table;
  std::string csv;
};

inline ReportOutput build_report(const std::vector<ResultRow>& rows, const std::vector<int>& l_mins) {
  for (auto mode : kAllModes)
    if (std::none_of(rows.begin(), rows.end(), [&](const ResultRow& r) { return r.mode == mode; }))
      throw MissingMode(fmt::format("results have no rows for reward mode '{}'", to_string(mode)));
  ReportOutput out;
  out.reports = reports_from_rows(rows, l_mins);
  out.cells = aggregate_cells(out.reports);
  out.table = compare_table(out.cells, l_mins);
  out.csv = report_csv(out.cells);
  return out;
}

inline ReportOutput cmd_report(const ExperimentConfig& cfg) {
  const Paths paths{cfg.output_dir};
  if (!fs::exists(paths.results())) throw DataError(fmt::format("results file missing at '{}'", paths.results().string()));
  std::istringstream in(read_file(paths.results()));
  auto out = build_report(read_results_csv(in), cfg.l_mins);
  write_file(paths.report(), out.csv);
  write_file(paths.report_text(), out.table.text);
  write_file(paths.report_matrix(), out.table.csv);
  return out;
}

/// gen, closeness, then train + eval for every mode, then report.
inline ReportOutput run_all(const ExperimentConfig& cfg) {
  cmd_gen(cfg);
  cmd_closeness(cfg);
  for (auto mode : kAllModes) {
    cmd_train(cfg, mode);
    cmd_eval(cfg, mode);
  }
  return cmd_report(cfg);
}

}  // namespace objnav
