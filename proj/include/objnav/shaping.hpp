#pragma once

// Per-step rewards for the four reward functions:
//   bin   - step penalty, plus R_t on success
//   base  - adds a one-shot R_t * Pr(t|p) * k for parents seen within a threshold
//   depth - partial credit scaled by k'(d) = k * (m d + c), d = mean bbox depth
//   area  - partial credit scaled by k'(A) = k * (1 - sqrt(A1 / A2))
// depth and area credit both parents and targets, through a high-water ledger:
// an object's cumulative credit is the largest instantaneous value reached.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <utility>

#include <fmt/format.h>

#include "objnav/closeness.hpp"
#include "objnav/errors.hpp"
#include "objnav/sensor.hpp"

namespace objnav {

enum class RewardMode { Bin = 0, Base = 1, Depth = 2, Area = 3 };

inline constexpr std::array<RewardMode, 4> kAllModes{RewardMode::Bin, RewardMode::Base, RewardMode::Depth,
                                                     RewardMode::Area};

inline const char* to_string(RewardMode m) {
  switch (m) {
    case RewardMode::Bin: return "bin";
    case RewardMode::Base: return "base";
    case RewardMode::Depth: return "depth";
    case RewardMode::Area: return "area";
  }
  return "?";
}

inline RewardMode reward_mode_from_string(std::string_view s) {
  for (auto m : kAllModes)
    if (s == to_string(m)) return m;
  throw ConfigError(fmt::format("unknown reward mode '{}' (expected bin, base, depth or area)", s));
}

struct RewardSpec {
  RewardMode mode = RewardMode::Bin;
  double r_t = 5.0;             // target reward
  double step_penalty = -0.01;
  double k = 0.1;
  double m = -0.15;             // per meter
  double c = 1.0;
  double parent_threshold = 1.0;  // meters
  double d_success = 1.0;         // meters
  double failure_reward = 0.0;
};

inline void validate(const RewardSpec& s) {
  if (!(s.k > 0.0)) throw ConfigError("reward k must be > 0");
  if (!(s.r_t > 0.0)) throw ConfigError("reward r_t must be > 0");
  if (!(s.step_penalty < 0.0)) throw ConfigError("reward step_penalty must be < 0");
  if (!(s.parent_threshold > 0.0)) throw ConfigError("reward parent_threshold_m must be > 0");
  if (!(s.d_success > 0.0)) throw ConfigError("reward d_success_m must be > 0");
}

/// k * clamp(m d + c, 0, 1).
inline double k_depth(double d, const RewardSpec& spec) {
  return spec.k * std::clamp(spec.m * d + spec.c, 0.0, 1.0);
}

/// k * max(0, 1 - sqrt(A1 / A2)).
inline double k_area(double a1, double a2, const RewardSpec& spec) {
  if (!(a1 > 0.0) || !(a2 > 0.0)) throw DegenerateArea("bounding box areas must be positive");
  return spec.k * std::max(0.0, 1.0 - std::sqrt(a1 / a2));
}

/// R_t * Pr(t|p) * k' for parents; R_t * k' for the target itself.
inline double partial_value(const RewardSpec& spec, const ClosenessTable& table, const std::string& target_class,
                            const Detection& det, double kprime) {
  switch (det.role) {
    case Role::Parent: return spec.r_t * table.lookup(target_class, det.class_name) * kprime;
    case Role::Target: return spec.r_t * 1.0 * kprime;
    case Role::Distractor: break;
  }
  throw InvariantError("partial_value called for a distractor");
}

enum class Terminal { None, Success, Failure };

struct ShapingState {
  std::map<int, long> first_area;   // A1 per object id
  std::map<int, double> credited;   // high-water credit already paid
  bool done = false;

  /// Records first sightings without paying anything (episode start view).
  void prime(const Observation& obs) {
    for (const auto& d : obs.detections)
      if (d.role != Role::Distractor) first_area.try_emplace(d.object_id, d.area);
  }

  friend bool operator==(const ShapingState&, const ShapingState&) = default;
};

/// Pays the increment of v over the object's credit and raises the credit.
inline double pay_high_water(ShapingState& state, int object_id, double v) {
  auto& credit = state.credited[object_id];
  const double pay = std::max(0.0, v - credit);
  credit = std::max(credit, v);
  return pay;
}

/// In-place variant of step_reward; returns the reward.
inline double apply_step_reward(const RewardSpec& spec, const ClosenessTable& table, const std::string& target_class,
                                const Observation& obs, ShapingState& state, Terminal terminal) {
  if (state.done) throw EpisodeAlreadyDone("step_reward called after the episode ended");
  double reward = spec.step_penalty;

  switch (spec.mode) {
    case RewardMode::Bin: break;
    case RewardMode::Base:
      for (const auto& det : obs.detections) {
        if (det.role != Role::Parent || det.mean_depth > spec.parent_threshold) continue;
        auto& credit = state.credited[det.object_id];
        if (credit != 0.0) continue;
        const double v = spec.r_t * table.lookup(target_class, det.class_name) * spec.k;
        reward += v;
        credit = v;
      }
      break;
    case RewardMode::Depth:
      for (const auto& det : obs.detections) {
        if (det.role == Role::Distractor) continue;
        if (det.role == Role::Target && det.class_name != target_class) continue;
        state.first_area.try_emplace(det.object_id, det.area);
        const double v = partial_value(spec, table, target_class, det, k_depth(det.mean_depth, spec));
        reward += pay_high_water(state, det.object_id, v);
      }
      break;
    case RewardMode::Area:
      for (const auto& det : obs.detections) {
        if (det.role == Role::Distractor) continue;
        if (det.role == Role::Target && det.class_name != target_class) continue;
        const auto [it, first] = state.first_area.try_emplace(det.object_id, det.area);
        if (first) continue;  // k_area is 0 at A1 == A2
        const double kp = k_area(static_cast<double>(it->second), static_cast<double>(det.area), spec);
        reward += pay_high_water(state, det.object_id, partial_value(spec, table, target_class, det, kp));
      }
      break;
  }

  if (terminal == Terminal::Success) {
    reward += spec.r_t;
    state.done = true;
  } else if (terminal == Terminal::Failure) {
    reward += spec.failure_reward;
    state.done = true;
  }
  return reward;
}

inline std::pair<double, ShapingState> step_reward(const RewardSpec& spec, const ClosenessTable& table,
                                                   const std::string& target_class, const Observation& obs,
                                                   ShapingState state, Terminal terminal) {
  const double r = apply_step_reward(spec, table, target_class, obs, state, terminal);
  return {r, std::move(state)};
}

}  // namespace objnav
