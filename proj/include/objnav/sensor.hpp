#pragma once

// Raycast 2.5D sensor: one ray per image column through the occupancy grid,
// producing a metric depth buffer and ground-truth object boxes.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "objnav/errors.hpp"
#include "objnav/scene.hpp"

namespace objnav {

struct Camera {
  double horizontal_fov_deg = 90.0;
  int columns = 64;
  int rows = 64;
  double max_range = 10.0;  // meters

  double half_fov_tan() const { return std::tan(horizontal_fov_deg * std::numbers::pi / 360.0); }

  /// Focal length in pixels. Vertical fov equals horizontal fov.
  double focal_px() const { return (rows / 2.0) / half_fov_tan(); }
};

inline void validate(const Camera& c) {
  if (c.columns < 8 || c.rows < 8) throw ConfigError("camera needs at least 8x8 pixels");
  if (!(c.horizontal_fov_deg > 0.0 && c.horizontal_fov_deg < 180.0))
    throw ConfigError("camera fov must lie in (0, 180) degrees");
  if (!(c.max_range > 0.0)) throw ConfigError("camera max_range must be positive");
}

/// Inclusive pixel bounds.
struct BBox {
  int col_min = 0;
  int row_min = 0;
  int col_max = 0;
  int row_max = 0;
  friend bool operator==(const BBox&, const BBox&) = default;
};

struct Detection {
  int object_id = 0;
  std::string class_name;
  Role role = Role::Distractor;
  BBox bbox;
  long area = 0;            // pixels^2
  double mean_depth = 0.0;  // meters, mean over every pixel in bbox
  friend bool operator==(const Detection&, const Detection&) = default;
};

/// rows x columns, row-major, meters.
struct DepthBuffer {
  int rows = 0;
  int columns = 0;
  std::vector<double> values;

  double at(int row, int col) const {
    return values[static_cast<std::size_t>(row) * columns + col];
  }
  double& at(int row, int col) { return values[static_cast<std::size_t>(row) * columns + col]; }
  friend bool operator==(const DepthBuffer&, const DepthBuffer&) = default;
};

struct Observation {
  DepthBuffer depth;
  std::vector<Detection> detections;
  friend bool operator==(const Observation&, const Observation&) = default;
};

inline long bbox_area(const BBox& b) {
  return static_cast<long>(b.col_max - b.col_min + 1) * (b.row_max - b.row_min + 1);
}
inline long bbox_area(const Detection& det) { return bbox_area(det.bbox); }

/// Mean depth over the inclusive rectangle (region phi), background pixels included.
inline double mean_depth(const DepthBuffer& depth, const BBox& b) {
  if (b.col_max < b.col_min || b.row_max < b.row_min) throw EmptyRegion("degenerate bounding box");
  if (b.col_min < 0 || b.row_min < 0 || b.col_max >= depth.columns || b.row_max >= depth.rows)
    throw EmptyRegion("bounding box outside the depth buffer");
  double sum = 0.0;
  for (int r = b.row_min; r <= b.row_max; ++r)
    for (int c = b.col_min; c <= b.col_max; ++c) sum += depth.at(r, c);
  return sum / static_cast<double>(bbox_area(b));
}

/// Projected pixel height of an object of the given physical height at
/// perpendicular distance d, clamped to [1, rows].
inline int project_height(double physical_height, double d, const Camera& cam) {
  if (!(d > 0.0)) throw DegenerateDistance("projection distance must be positive");
  const double px = std::round(physical_height * cam.focal_px() / d);
  return static_cast<int>(std::clamp(px, 1.0, static_cast<double>(cam.rows)));
}

/// Vertical span [top, bottom] of a projected height, centered on the horizon.
inline std::pair<int, int> vertical_span(int height_px, int rows) {
  const int top = (rows - height_px) / 2;
  return {top, top + height_px - 1};
}

/// Unit-free ray direction for a column: forward + plane * x, x in (-1, 1).
/// With this parametrisation the ray parameter t is the perpendicular distance.
inline std::pair<double, double> column_ray(Heading h, int col, const Camera& cam) {
  const double fx = heading_dx(h), fy = heading_dy(h);
  const double rx = heading_dx(rotate_right(h)), ry = heading_dy(rotate_right(h));
  const double cx = 2.0 * (col + 0.5) / cam.columns - 1.0;
  const double t = cam.half_fov_tan();
  return {fx + rx * t * cx, fy + ry * t * cx};
}

/// What one column's ray sees: the first object (if any) and the background wall.
struct ColumnHit {
  int object_id = -1;          // -1 if no object before the wall
  double object_dist = 0.0;    // meters
  double background = 0.0;     // meters, clamped to max_range
};

/// DDA grid traversal from the center of the agent's cell.
inline ColumnHit cast_column(const Scene& scene, const AgentPose& pose, int col, const Camera& cam) {
  const auto [dx, dy] = column_ray(pose.heading, col, cam);
  const double inf = std::numeric_limits<double>::infinity();
  const double delta_x = dx == 0.0 ? inf : std::abs(1.0 / dx);
  const double delta_y = dy == 0.0 ? inf : std::abs(1.0 / dy);
  const int step_x = dx < 0.0 ? -1 : 1;
  const int step_y = dy < 0.0 ? -1 : 1;
  // Agent sits at the cell center, so the first boundary is half a cell away.
  double side_x = 0.5 * delta_x;
  double side_y = 0.5 * delta_y;
  int mx = pose.x, my = pose.y;
  const double range_cells = cam.max_range / scene.cell_size();

  ColumnHit hit;
  while (true) {
    double t;
    if (side_x < side_y) {
      t = side_x;
      side_x += delta_x;
      mx += step_x;
    } else {
      t = side_y;
      side_y += delta_y;
      my += step_y;
    }
    if (t > range_cells) {
      hit.background = cam.max_range;
      return hit;
    }
    const auto occ = scene.at(mx, my);
    if (occ == Scene::kWall) {
      hit.background = std::min(t * scene.cell_size(), cam.max_range);
      return hit;
    }
    if (occ >= 0 && hit.object_id < 0) {
      hit.object_id = occ;
      hit.object_dist = t * scene.cell_size();
    }
  }
}

namespace detail {

/// Shared by render() and the test oracles: column hits -> depth buffer and detections.
inline Observation compose_observation(const Scene& scene, std::span<const ColumnHit> hits, const Camera& cam) {
  Observation obs;
  obs.depth.rows = cam.rows;
  obs.depth.columns = cam.columns;
  obs.depth.values.assign(static_cast<std::size_t>(cam.rows) * cam.columns, 0.0);

  struct Accum {
    bool seen = false;
    BBox box;
  };
  std::vector<Accum> boxes(scene.objects().size());
  std::vector<int> order;

  for (int col = 0; col < cam.columns; ++col) {
    const auto& h = hits[static_cast<std::size_t>(col)];
    for (int r = 0; r < cam.rows; ++r) obs.depth.at(r, col) = h.background;
    if (h.object_id < 0 || h.object_dist > cam.max_range) continue;
    const auto& obj = scene.object(h.object_id);
    const int px = project_height(obj.physical_height, h.object_dist, cam);
    const auto [top, bottom] = vertical_span(px, cam.rows);
    for (int r = top; r <= bottom; ++r) obs.depth.at(r, col) = h.object_dist;
    auto& acc = boxes[static_cast<std::size_t>(h.object_id)];
    if (!acc.seen) {
      acc.seen = true;
      acc.box = {col, top, col, bottom};
      order.push_back(h.object_id);
    } else {
      acc.box.col_min = std::min(acc.box.col_min, col);
      acc.box.col_max = std::max(acc.box.col_max, col);
      acc.box.row_min = std::min(acc.box.row_min, top);
      acc.box.row_max = std::max(acc.box.row_max, bottom);
    }
  }

  for (int id : order) {
    const auto& obj = scene.object(id);
    Detection det;
    det.object_id = id;
    det.class_name = obj.class_name;
    det.role = obj.role;
    det.bbox = boxes[static_cast<std::size_t>(id)].box;
    det.area = bbox_area(det.bbox);
    det.mean_depth = mean_depth(obs.depth, det.bbox);
    obs.detections.push_back(std::move(det));
  }
  return obs;
}

}  // namespace detail

/// Renders the view from pose. Every column hitting an object contributes to
/// that object's single Detection (tight box over all its visible spans).
inline Observation render(const Scene& scene, const AgentPose& pose, const Camera& cam) {
  std::vector<ColumnHit> hits(static_cast<std::size_t>(cam.columns));
  for (int col = 0; col < cam.columns; ++col) hits[static_cast<std::size_t>(col)] = cast_column(scene, pose, col, cam);
  return detail::compose_observation(scene, hits, cam);
}

inline nlohmann::json observation_to_json(const Observation& obs) {
  nlohmann::json dets = nlohmann::json::array();
  for (const auto& d : obs.detections) {
    dets.push_back({{"object_id", d.object_id},
                    {"class", d.class_name},
                    {"role", to_string(d.role)},
                    {"bbox", {d.bbox.col_min, d.bbox.row_min, d.bbox.col_max, d.bbox.row_max}},
                    {"area", d.area},
                    {"mean_depth", d.mean_depth}});
  }
  return {{"rows", obs.depth.rows}, {"columns", obs.depth.columns}, {"depth", obs.depth.values}, {"detections", dets}};
}

}  // namespace objnav
