#pragma once

// Goal predicate and the breadth-first shortest-path oracle over
// (x, y, heading) states.

#include <algorithm>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

#include "objnav/scene.hpp"
#include "objnav/sensor.hpp"

namespace objnav {

inline constexpr double kDefaultSuccessDistance = 1.0;  // meters

/// True iff a detection of target_class is within d_success (mean depth).
inline bool success_check(std::string_view target_class, const Observation& obs,
                          double d_success = kDefaultSuccessDistance) {
  return std::any_of(obs.detections.begin(), obs.detections.end(), [&](const Detection& d) {
    return d.class_name == target_class && d.mean_depth <= d_success;
  });
}

inline bool success_check(const Scene&, const AgentPose&, std::string_view target_class, const Observation& obs,
                          double d_success = kDefaultSuccessDistance) {
  return success_check(target_class, obs, d_success);
}

inline std::size_t pose_index(const Scene& s, const AgentPose& p) {
  return (static_cast<std::size_t>(p.y) * s.width() + p.x) * 4 + static_cast<std::size_t>(p.heading);
}

inline AgentPose pose_from_index(const Scene& s, std::size_t i) {
  const auto cell = i / 4;
  return {static_cast<int>(cell % s.width()), static_cast<int>(cell / s.width()), static_cast<Heading>(i % 4)};
}

inline std::size_t pose_count(const Scene& s) { return static_cast<std::size_t>(s.width()) * s.height() * 4; }

/// Detections for every Free pose of a scene, rendered once. Depth buffers
/// are dropped; each Detection already carries its mean depth.
class ObservationCache {
 public:
  ObservationCache(const Scene& scene, const Camera& camera) : scene_(&scene), camera_(camera) {
    observations_.resize(pose_count(scene));
    for (int y = 0; y < scene.height(); ++y)
      for (int x = 0; x < scene.width(); ++x) {
        if (!scene.is_free(x, y)) continue;
        for (auto h : kHeadings) {
          const AgentPose p{x, y, h};
          auto obs = render(scene, p, camera);
          obs.depth = {};
          observations_[pose_index(scene, p)] = std::move(obs);
        }
      }
  }

  const Scene& scene() const { return *scene_; }
  const Camera& camera() const { return camera_; }
  const Observation& at(const AgentPose& p) const { return observations_[pose_index(*scene_, p)]; }

 private:
  const Scene* scene_;
  Camera camera_;
  std::vector<Observation> observations_;
};

inline constexpr int kUnreachable = -1;

/// Steps-to-goal for every pose (kUnreachable where no goal pose can be
/// reached), by reverse BFS from the set of poses passing success_check.
inline std::vector<int> distance_field(const ObservationCache& cache, std::string_view target_class,
                                       double d_success = kDefaultSuccessDistance) {
  const Scene& s = cache.scene();
  std::vector<int> dist(pose_count(s), kUnreachable);
  std::queue<AgentPose> q;
  for (int y = 0; y < s.height(); ++y)
    for (int x = 0; x < s.width(); ++x) {
      if (!s.is_free(x, y)) continue;
      for (auto h : kHeadings) {
        const AgentPose p{x, y, h};
        if (success_check(target_class, cache.at(p), d_success)) {
          dist[pose_index(s, p)] = 0;
          q.push(p);
        }
      }
    }
  while (!q.empty()) {
    const auto p = q.front();
    q.pop();
    const int next = dist[pose_index(s, p)] + 1;
    // Predecessors: the two rotations into p, and the cell behind p moving forward.
    AgentPose preds[3] = {{p.x, p.y, rotate_left(p.heading)}, {p.x, p.y, rotate_right(p.heading)},
                          {p.x - heading_dx(p.heading), p.y - heading_dy(p.heading), p.heading}};
    for (int i = 0; i < 3; ++i) {
      const auto& pr = preds[i];
      if (!s.is_free(pr.x, pr.y)) continue;
      auto& d = dist[pose_index(s, pr)];
      if (d == kUnreachable) {
        d = next;
        q.push(pr);
      }
    }
  }
  return dist;
}

/// Minimum number of MoveAhead/Rotate actions from start to a pose where
/// success_check holds for target_class. The terminating Done is not counted.
/// nullopt when unreachable.
inline std::optional<int> shortest_path_length(const ObservationCache& cache, const AgentPose& start,
                                               std::string_view target_class,
                                               double d_success = kDefaultSuccessDistance) {
  const Scene& s = cache.scene();
  if (!s.is_free(start.x, start.y)) return std::nullopt;
  std::vector<char> seen(pose_count(s), 0);
  std::queue<std::pair<AgentPose, int>> q;
  q.push({start, 0});
  seen[pose_index(s, start)] = 1;
  while (!q.empty()) {
    const auto [p, d] = q.front();
    q.pop();
    if (success_check(target_class, cache.at(p), d_success)) return d;
    for (auto a : {Action::MoveAhead, Action::RotateLeft, Action::RotateRight}) {
      const auto n = step(s, p, a);
      auto& flag = seen[pose_index(s, n)];
      if (!flag) {
        flag = 1;
        q.push({n, d + 1});
      }
    }
  }
  return std::nullopt;
}

inline std::optional<int> shortest_path_length(const Scene& scene, const AgentPose& start, std::string_view target_class,
                                               const Camera& camera, double d_success = kDefaultSuccessDistance) {
  const ObservationCache cache(scene, camera);
  return shortest_path_length(cache, start, target_class, d_success);
}

}  // namespace objnav
