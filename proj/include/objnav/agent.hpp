#pragma once

// Tabular Q-learning over (x, y, heading) with one table block per
// (scene, target class), plus the episode loop that ties together kinematics,
// rendering and reward shaping.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "objnav/closeness.hpp"
#include "objnav/errors.hpp"
#include "objnav/navigation.hpp"
#include "objnav/rng.hpp"
#include "objnav/scene.hpp"
#include "objnav/shaping.hpp"

namespace objnav {

struct TrainConfig {
  int episodes = 20000;
  int max_steps = 100;
  double alpha = 0.1;
  double gamma = 0.99;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  int epsilon_decay_episodes = 10000;
  std::uint64_t seed = 0;
};

inline void validate(const TrainConfig& c) {
  if (c.episodes < 0) throw ConfigError("train episodes must be >= 0");
  if (c.max_steps < 1) throw ConfigError("train max_steps must be >= 1");
  if (!(c.alpha > 0.0 && c.alpha <= 1.0)) throw ConfigError("train alpha must lie in (0, 1]");
  if (!(c.gamma > 0.0 && c.gamma < 1.0)) throw ConfigError("train gamma must lie in (0, 1)");
  for (double e : {c.epsilon_start, c.epsilon_end})
    if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("train epsilon must lie in [0, 1]");
  if (c.epsilon_decay_episodes < 0) throw ConfigError("train epsilon_decay_episodes must be >= 0");
}

/// Linear decay from epsilon_start to epsilon_end over epsilon_decay_episodes.
inline double epsilon_at(const TrainConfig& c, int episode) {
  if (c.epsilon_decay_episodes <= 0 || episode >= c.epsilon_decay_episodes) return c.epsilon_end;
  const double frac = static_cast<double>(episode) / c.epsilon_decay_episodes;
  return c.epsilon_start + (c.epsilon_end - c.epsilon_start) * frac;
}

using ActionValues = std::array<double, kNumActions>;

class QTable {
 public:
  struct BlockKey {
    std::string scene_id;
    std::string target_class;
    friend auto operator<=>(const BlockKey&, const BlockKey&) = default;
  };
  struct Block {
    int width = 0;
    int height = 0;
    std::vector<double> values;  // ((y * width + x) * 4 + heading) * 4 + action

    std::size_t offset(const AgentPose& p) const {
      return ((static_cast<std::size_t>(p.y) * width + p.x) * 4 + static_cast<std::size_t>(p.heading)) * kNumActions;
    }
    std::span<double, kNumActions> row(const AgentPose& p) {
      return std::span<double, kNumActions>(values.data() + offset(p), kNumActions);
    }
    std::span<const double, kNumActions> row(const AgentPose& p) const {
      return std::span<const double, kNumActions>(values.data() + offset(p), kNumActions);
    }
    friend bool operator==(const Block&, const Block&) = default;
  };

  /// Block for (scene, target), zero-initialised on first use.
  Block& block(const std::string& scene_id, const std::string& target, int width, int height) {
    auto [it, inserted] = blocks_.try_emplace(BlockKey{scene_id, target});
    if (inserted) {
      it->second.width = width;
      it->second.height = height;
      it->second.values.assign(static_cast<std::size_t>(width) * height * 4 * kNumActions, 0.0);
    }
    return it->second;
  }
  Block& block(const Scene& s, const std::string& target) { return block(s.id(), target, s.width(), s.height()); }

  const Block* find(const std::string& scene_id, const std::string& target) const {
    const auto it = blocks_.find(BlockKey{scene_id, target});
    return it == blocks_.end() ? nullptr : &it->second;
  }

  /// Q value; unseen keys read as 0.
  double value(const std::string& scene_id, const std::string& target, const AgentPose& p, Action a) const {
    const auto* b = find(scene_id, target);
    if (!b) return 0.0;
    return b->row(p)[static_cast<std::size_t>(a)];
  }

  const std::map<BlockKey, Block>& blocks() const { return blocks_; }
  std::map<BlockKey, Block>& blocks() { return blocks_; }

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  std::map<BlockKey, Block> blocks_;
};

/// Greedy argmax with ties going to the lowest action index.
inline Action greedy_action(std::span<const double, kNumActions> q) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < kNumActions; ++a)
    if (q[a] > q[best]) best = a;
  return static_cast<Action>(best);
}

/// Epsilon-greedy. Always consumes one uniform draw, plus one more when exploring.
inline Action select_action(std::span<const double, kNumActions> q, double epsilon, Rng& rng) {
  if (uniform01(rng) < epsilon) return static_cast<Action>(uniform_index(rng, kNumActions));
  return greedy_action(q);
}

/// One-step TD backup: Q(s,a) += alpha * (r + gamma * max Q(s') * [!terminal] - Q(s,a)).
inline void q_update(std::span<double, kNumActions> q_s, Action a, double r, std::span<const double, kNumActions> q_next,
                     bool terminal, const TrainConfig& cfg) {
  if (!std::isfinite(r)) throw InvariantError("non-finite reward in q_update");
  const double bootstrap = terminal ? 0.0 : cfg.gamma * *std::max_element(q_next.begin(), q_next.end());
  auto& q = q_s[static_cast<std::size_t>(a)];
  q += cfg.alpha * (r + bootstrap - q);
  if (!std::isfinite(q)) throw InvariantError("non-finite Q value");
}

struct EpisodeResult {
  bool success = false;
  int taken_steps = 0;    // includes the final Done
  int optimal_steps = 0;  // shortest path plus the Done action
  double cumulative_reward = 0.0;
  std::string scene_id;
  std::string target_class;
  AgentPose start;
};

/// One recorded step, enough to replay the reward stream offline.
struct TraceStep {
  AgentPose pose_before;
  Action action;
  AgentPose pose_after;
  Terminal terminal;
  double reward;
};

enum class RunMode { Train, EvalGreedy };

/// Immutable per-scene context: rendered views plus per-target distance fields.
class SceneContext {
 public:
  SceneContext(const Scene& scene, const Camera& camera, double d_success)
      : scene_(scene), cache_(scene_, camera), d_success_(d_success) {
    for (const auto& t : scene_.classes_with_role(Role::Target)) {
      auto field = distance_field(cache_, t, d_success);
      auto& starts = starts_[t];
      for (std::size_t i = 0; i < field.size(); ++i)
        if (field[i] >= 1) starts.push_back(pose_from_index(scene_, i));
      fields_.emplace(t, std::move(field));
    }
  }
  SceneContext(const SceneContext&) = delete;
  SceneContext& operator=(const SceneContext&) = delete;

  const Scene& scene() const { return scene_; }
  const ObservationCache& cache() const { return cache_; }
  double d_success() const { return d_success_; }
  std::vector<std::string> target_classes() const { return scene_.classes_with_role(Role::Target); }

  /// Shortest path length (without Done); nullopt when unreachable or target absent.
  std::optional<int> distance(const std::string& target, const AgentPose& p) const {
    const auto it = fields_.find(target);
    if (it == fields_.end() || !scene_.is_free(p.x, p.y)) return std::nullopt;
    const int d = it->second[pose_index(scene_, p)];
    if (d == kUnreachable) return std::nullopt;
    return d;
  }

  /// Free poses at distance >= 1 from target, in index order.
  const std::vector<AgentPose>& start_poses(const std::string& target) const {
    static const std::vector<AgentPose> kNone;
    const auto it = starts_.find(target);
    return it == starts_.end() ? kNone : it->second;
  }

 private:
  Scene scene_;
  ObservationCache cache_;
  double d_success_;
  std::map<std::string, std::vector<int>> fields_;
  std::map<std::string, std::vector<AgentPose>> starts_;
};

inline AgentPose sample_start(const SceneContext& ctx, const std::string& target, Rng& rng) {
  const auto& poses = ctx.start_poses(target);
  if (poses.empty()) throw UnreachableStart(fmt::format("scene {}: no start pose reaches '{}'", ctx.scene().id(), target));
  return poses[uniform_index(rng, poses.size())];
}

/// Runs one episode from an explicit start. Train mode updates q; EvalGreedy
/// forces epsilon to 0 and leaves q untouched.
inline EpisodeResult run_episode(const SceneContext& ctx, const std::string& target_class, const AgentPose& start,
                                 const RewardSpec& spec, const ClosenessTable& table, QTable& q, const TrainConfig& cfg,
                                 RunMode mode, double epsilon, Rng& rng, std::vector<TraceStep>* trace = nullptr) {
  const Scene& scene = ctx.scene();
  const auto optimal = ctx.distance(target_class, start);
  if (!optimal) throw UnreachableStart(fmt::format("scene {}: start ({},{},{}) cannot reach '{}'", scene.id(), start.x,
                                                   start.y, heading_char(start.heading), target_class));

  EpisodeResult result;
  result.scene_id = scene.id();
  result.target_class = target_class;
  result.start = start;
  result.optimal_steps = *optimal + 1;

  const bool training = mode == RunMode::Train;
  const double eps = training ? epsilon : 0.0;
  // Eval reads through a const block so the table stays bit-identical.
  QTable::Block* write = nullptr;
  const QTable::Block* read = nullptr;
  QTable::Block zero_block;
  if (training) {
    write = &q.block(scene, target_class);
    read = write;
  } else if (const auto* found = std::as_const(q).find(scene.id(), target_class)) {
    read = found;
  } else {
    zero_block.width = scene.width();
    zero_block.height = scene.height();
    zero_block.values.assign(static_cast<std::size_t>(scene.width()) * scene.height() * 4 * kNumActions, 0.0);
    read = &zero_block;
  }

  ShapingState shaping;
  shaping.prime(ctx.cache().at(start));
  AgentPose pose = start;
  for (int t = 0; t < cfg.max_steps; ++t) {
    const auto row = read->row(pose);
    const Action a = select_action(row, eps, rng);
    ++result.taken_steps;
    const AgentPose next = step(scene, pose, a);
    const Observation& obs = ctx.cache().at(next);
    Terminal terminal = Terminal::None;
    if (a == Action::Done) {
      result.success = success_check(target_class, obs, ctx.d_success());
      terminal = result.success ? Terminal::Success : Terminal::Failure;
    } else if (result.taken_steps == cfg.max_steps) {
      terminal = Terminal::Failure;
    }
    const double r = apply_step_reward(spec, table, target_class, obs, shaping, terminal);
    result.cumulative_reward += r;
    if (trace) trace->push_back({pose, a, next, terminal, r});
    if (write) q_update(write->row(pose), a, r, read->row(next), terminal != Terminal::None, cfg);
    pose = next;
    if (terminal != Terminal::None) break;
  }
  return result;
}

/// Samples a start pose (uniform over poses with shortest path >= 1) and runs.
inline EpisodeResult run_episode(const SceneContext& ctx, const std::string& target_class, const RewardSpec& spec,
                                 const ClosenessTable& table, QTable& q, const TrainConfig& cfg, RunMode mode,
                                 double epsilon, Rng& rng) {
  const auto start = sample_start(ctx, target_class, rng);
  return run_episode(ctx, target_class, start, spec, table, q, cfg, mode, epsilon, rng);
}

struct TrainLogLine {
  int episode = 0;
  double reward = 0.0;
  bool success = false;
};

/// Trains one scene's table. Episodes cycle over the scene's target classes.
/// Every log_every-th episode (and the last) is reported in the returned log.
inline std::vector<TrainLogLine> train_scene(const SceneContext& ctx, const RewardSpec& spec, const ClosenessTable& table,
                                             QTable& q, const TrainConfig& cfg, int log_every = 1000) {
  Rng rng(cfg.seed);
  const auto targets = ctx.target_classes();
  if (targets.empty()) throw DataError(fmt::format("scene {} has no target instance", ctx.scene().id()));
  std::vector<TrainLogLine> log;
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    const auto& target = targets[static_cast<std::size_t>(ep) % targets.size()];
    const auto res = run_episode(ctx, target, spec, table, q, cfg, RunMode::Train, epsilon_at(cfg, ep), rng);
    if (log_every > 0 && (ep % log_every == 0 || ep + 1 == cfg.episodes))
      log.push_back({ep, res.cumulative_reward, res.success});
  }
  return log;
}

// ---------------------------------------------------------------------------
// Checkpoints: JSON with a format header; only non-zero rows are stored.

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json qtable_to_json(const QTable& q) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& [key, b] : q.blocks()) {
    nlohmann::json rows = nlohmann::json::array();
    for (int y = 0; y < b.height; ++y)
      for (int x = 0; x < b.width; ++x)
        for (auto h : kHeadings) {
          const auto r = b.row({x, y, h});
          if (std::all_of(r.begin(), r.end(), [](double v) { return v == 0.0; })) continue;
          rows.push_back({x, y, std::string(1, heading_char(h)), {r[0], r[1], r[2], r[3]}});
        }
    blocks.push_back(
        {{"scene_id", key.scene_id}, {"target", key.target_class}, {"width", b.width}, {"height", b.height}, {"rows", rows}});
  }
  return {{"format", "objnav-qtable"}, {"version", kCheckpointVersion}, {"blocks", blocks}};
}

inline QTable qtable_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "objnav-qtable") throw DataError("not a Q-table checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw DataError(fmt::format("unsupported checkpoint version {}", j.at("version").get<int>()));
    QTable q;
    for (const auto& jb : j.at("blocks")) {
      auto& b = q.block(jb.at("scene_id").get<std::string>(), jb.at("target").get<std::string>(),
                        jb.at("width").get<int>(), jb.at("height").get<int>());
      for (const auto& row : jb.at("rows")) {
        const AgentPose p{row.at(0).get<int>(), row.at(1).get<int>(), heading_from_char(row.at(2).get<std::string>().at(0))};
        if (p.x < 0 || p.y < 0 || p.x >= b.width || p.y >= b.height) throw DataError("checkpoint row out of bounds");
        auto dst = b.row(p);
        for (std::size_t a = 0; a < kNumActions; ++a) dst[a] = row.at(3).at(a).get<double>();
      }
    }
    return q;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace objnav
