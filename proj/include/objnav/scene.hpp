#pragma once

// Grid-world scenes: occupancy, placed objects, agent kinematics and the
// seeded procedural generator.

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "objnav/errors.hpp"
#include "objnav/rng.hpp"

namespace objnav {

enum class Role { Target, Parent, Distractor };

inline const char* to_string(Role r) {
  switch (r) {
    case Role::Target: return "target";
    case Role::Parent: return "parent";
    case Role::Distractor: return "distractor";
  }
  return "?";
}

inline Role role_from_string(const std::string& s) {
  if (s == "target") return Role::Target;
  if (s == "parent") return Role::Parent;
  if (s == "distractor") return Role::Distractor;
  throw DataError("unknown object role '" + s + "'");
}

enum class Heading : std::uint8_t { N = 0, E = 1, S = 2, W = 3 };

inline constexpr std::array<Heading, 4> kHeadings{Heading::N, Heading::E, Heading::S, Heading::W};

// y grows downwards (row index), so north is -y.
inline constexpr int heading_dx(Heading h) {
  constexpr int dx[4] = {0, 1, 0, -1};
  return dx[static_cast<int>(h)];
}
inline constexpr int heading_dy(Heading h) {
  constexpr int dy[4] = {-1, 0, 1, 0};
  return dy[static_cast<int>(h)];
}
inline constexpr Heading rotate_right(Heading h) {
  return static_cast<Heading>((static_cast<int>(h) + 1) % 4);
}
inline constexpr Heading rotate_left(Heading h) {
  return static_cast<Heading>((static_cast<int>(h) + 3) % 4);
}

inline char heading_char(Heading h) { return "NESW"[static_cast<int>(h)]; }

inline Heading heading_from_char(char c) {
  switch (c) {
    case 'N': return Heading::N;
    case 'E': return Heading::E;
    case 'S': return Heading::S;
    case 'W': return Heading::W;
    default: throw DataError(fmt::format("unknown heading '{}'", c));
  }
}

// Order doubles as the greedy tie-break order.
enum class Action : std::uint8_t { MoveAhead = 0, RotateLeft = 1, RotateRight = 2, Done = 3 };
inline constexpr int kNumActions = 4;

inline const char* to_string(Action a) {
  switch (a) {
    case Action::MoveAhead: return "MoveAhead";
    case Action::RotateLeft: return "RotateLeft";
    case Action::RotateRight: return "RotateRight";
    case Action::Done: return "Done";
  }
  return "?";
}

struct AgentPose {
  int x = 0;
  int y = 0;
  Heading heading = Heading::N;

  friend bool operator==(const AgentPose&, const AgentPose&) = default;
};

struct GridCell {
  int x = 0;
  int y = 0;
  friend bool operator==(const GridCell&, const GridCell&) = default;
  friend auto operator<=>(const GridCell&, const GridCell&) = default;
};

struct ObjectInstance {
  int object_id = 0;
  std::string class_name;
  Role role = Role::Distractor;
  std::vector<GridCell> cells;
  double physical_height = 0.0;  // meters
  double physical_width = 0.0;   // meters

  friend bool operator==(const ObjectInstance&, const ObjectInstance&) = default;
};

class Scene {
 public:
  static constexpr std::int32_t kFree = -1;
  static constexpr std::int32_t kWall = -2;

  Scene() = default;
  Scene(std::string id, int width, int height, double cell_size, std::uint64_t seed)
      : id_(std::move(id)),
        width_(width),
        height_(height),
        cell_size_(cell_size),
        seed_(seed),
        occupancy_(static_cast<std::size_t>(width) * height, kFree) {}

  const std::string& id() const { return id_; }
  int width() const { return width_; }
  int height() const { return height_; }
  double cell_size() const { return cell_size_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<ObjectInstance>& objects() const { return objects_; }

  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  /// Raw occupancy code: kFree, kWall, or an object id (>= 0). Out of bounds reads as wall.
  std::int32_t at(int x, int y) const {
    if (!in_bounds(x, y)) return kWall;
    return occupancy_[index(x, y)];
  }
  bool is_free(int x, int y) const { return at(x, y) == kFree; }
  bool is_wall(int x, int y) const { return at(x, y) == kWall; }
  std::optional<int> object_at(int x, int y) const {
    const auto v = at(x, y);
    if (v >= 0) return v;
    return std::nullopt;
  }

  const ObjectInstance& object(int id) const { return objects_.at(static_cast<std::size_t>(id)); }

  void set_wall(int x, int y) { occupancy_[index(x, y)] = kWall; }
  void set_free(int x, int y) { occupancy_[index(x, y)] = kFree; }

  /// Object ids are dense: the instance's id must equal its position in objects().
  void add_object(ObjectInstance obj) {
    if (obj.object_id != static_cast<int>(objects_.size()))
      throw InvariantError("object ids must be dense and in insertion order");
    for (const auto& c : obj.cells) occupancy_[index(c.x, c.y)] = obj.object_id;
    objects_.push_back(std::move(obj));
  }
  void pop_object() {
    for (const auto& c : objects_.back().cells) occupancy_[index(c.x, c.y)] = kFree;
    objects_.pop_back();
  }

  std::vector<std::string> classes_with_role(Role role) const {
    std::vector<std::string> out;
    for (const auto& o : objects_)
      if (o.role == role) out.push_back(o.class_name);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::vector<GridCell> free_cells() const {
    std::vector<GridCell> out;
    for (int y = 0; y < height_; ++y)
      for (int x = 0; x < width_; ++x)
        if (is_free(x, y)) out.push_back({x, y});
    return out;
  }

  friend bool operator==(const Scene&, const Scene&) = default;

 private:
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

  std::string id_;
  int width_ = 0;
  int height_ = 0;
  double cell_size_ = 0.25;
  std::uint64_t seed_ = 0;
  std::vector<std::int32_t> occupancy_;
  std::vector<ObjectInstance> objects_;
};

/// Grid kinematics. Total: moves into walls, objects or off-grid leave the pose unchanged.
inline AgentPose step(const Scene& scene, const AgentPose& pose, Action action) {
  switch (action) {
    case Action::MoveAhead: {
      const int nx = pose.x + heading_dx(pose.heading);
      const int ny = pose.y + heading_dy(pose.heading);
      if (scene.is_free(nx, ny)) return {nx, ny, pose.heading};
      return pose;
    }
    case Action::RotateLeft: return {pose.x, pose.y, rotate_left(pose.heading)};
    case Action::RotateRight: return {pose.x, pose.y, rotate_right(pose.heading)};
    case Action::Done: return pose;
  }
  return pose;
}

// ---------------------------------------------------------------------------
// Generation

struct ClassSpec {
  std::string name;
  double height = 0.5;  // meters
  // Targets only: parent class this target prefers to sit next to. Empty
  // means any parent instance.
  std::string near;
};

struct GenParams {
  int width = 16;
  int height = 16;
  double cell_size = 0.25;
  std::vector<ClassSpec> target_classes;
  std::vector<ClassSpec> parent_classes;
  std::vector<ClassSpec> distractor_classes;
  int n_targets = 2;
  int n_parents = 3;
  int n_distractors = 0;
  double rho = 0.8;  // probability a target is placed within 2 cells of a parent
  int wall_segments = 3;
  int max_attempts = 1000;  // per object
};

inline void validate(const GenParams& p) {
  if (p.width < 8 || p.height < 8) throw ConfigError("scene grid must be at least 8x8");
  if (p.cell_size <= 0.0) throw ConfigError("cell_size must be positive");
  if (p.target_classes.empty()) throw ConfigError("at least one target class is required");
  if (p.parent_classes.empty()) throw ConfigError("at least one parent class is required");
  if (p.n_targets < 1 || p.n_parents < 1 || p.n_distractors < 0)
    throw ConfigError("need n_targets >= 1, n_parents >= 1, n_distractors >= 0");
  if (!(p.rho >= 0.0 && p.rho <= 1.0)) throw ConfigError("rho must lie in [0, 1]");
  if (p.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
  double tallest_target = 0.0;
  for (const auto& c : p.target_classes) tallest_target = std::max(tallest_target, c.height);
  for (const auto& c : p.parent_classes) {
    if (c.height < tallest_target)
      throw ConfigError(fmt::format("parent class '{}' is shorter than a target class", c.name));
  }
  for (const auto* list : {&p.target_classes, &p.parent_classes, &p.distractor_classes})
    for (const auto& c : *list)
      if (c.height <= 0.0) throw ConfigError(fmt::format("class '{}' needs a positive height", c.name));
  for (const auto& t : p.target_classes) {
    if (t.near.empty()) continue;
    const bool known = std::any_of(p.parent_classes.begin(), p.parent_classes.end(),
                                   [&](const ClassSpec& c) { return c.name == t.near; });
    if (!known) throw ConfigError(fmt::format("target '{}' prefers unknown parent '{}'", t.name, t.near));
  }
}

namespace detail {

// All Free cells form one 4-connected component and every target touches one.
inline bool free_space_connected(const Scene& s) {
  const auto cells = s.free_cells();
  if (cells.empty()) return false;
  std::vector<char> seen(static_cast<std::size_t>(s.width()) * s.height(), 0);
  std::queue<GridCell> q;
  q.push(cells.front());
  seen[static_cast<std::size_t>(cells.front().y) * s.width() + cells.front().x] = 1;
  std::size_t count = 0;
  while (!q.empty()) {
    const auto c = q.front();
    q.pop();
    ++count;
    for (auto h : kHeadings) {
      const int nx = c.x + heading_dx(h), ny = c.y + heading_dy(h);
      if (!s.is_free(nx, ny)) continue;
      auto& flag = seen[static_cast<std::size_t>(ny) * s.width() + nx];
      if (!flag) {
        flag = 1;
        q.push({nx, ny});
      }
    }
  }
  return count == cells.size();
}

inline bool touches_free(const Scene& s, const ObjectInstance& o) {
  for (const auto& c : o.cells)
    for (auto h : kHeadings)
      if (s.is_free(c.x + heading_dx(h), c.y + heading_dy(h))) return true;
  return false;
}

inline bool placement_ok(const Scene& s) {
  if (!free_space_connected(s)) return false;
  for (const auto& o : s.objects())
    if (o.role == Role::Target && !touches_free(s, o)) return false;
  return true;
}

inline const ClassSpec& pick(Rng& rng, const std::vector<ClassSpec>& classes) {
  return classes[uniform_index(rng, classes.size())];
}

inline int chebyshev(const GridCell& a, const GridCell& b) {
  return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y));
}

}  // namespace detail

/// Deterministic in (seed, params). Throws PlacementFailure when an object
/// cannot be placed within params.max_attempts tries.
inline Scene generate_scene(std::uint64_t seed, const GenParams& params) {
  validate(params);
  Rng rng(seed);
  Scene scene(fmt::format("scene-{:016x}", seed), params.width, params.height, params.cell_size, seed);
  const int w = params.width, h = params.height;

  for (int x = 0; x < w; ++x) {
    scene.set_wall(x, 0);
    scene.set_wall(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    scene.set_wall(0, y);
    scene.set_wall(w - 1, y);
  }

  // Interior wall runs. A run that would split the free space is rolled back.
  for (int seg = 0; seg < params.wall_segments; ++seg) {
    bool placed = false;
    for (int attempt = 0; attempt < params.max_attempts && !placed; ++attempt) {
      const bool horizontal = bernoulli(rng, 0.5);
      const int span = horizontal ? w : h;
      const int len = 2 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(std::max(1, span / 2 - 1))));
      const int x0 = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(w - 2)));
      const int y0 = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(h - 2)));
      std::vector<GridCell> cells;
      for (int i = 0; i < len; ++i) {
        const int x = horizontal ? x0 + i : x0;
        const int y = horizontal ? y0 : y0 + i;
        if (x >= w - 1 || y >= h - 1) break;
        if (scene.is_free(x, y)) cells.push_back({x, y});
      }
      if (cells.empty()) continue;
      for (const auto& c : cells) scene.set_wall(c.x, c.y);
      if (detail::free_space_connected(scene)) {
        placed = true;
      } else {
        for (const auto& c : cells) scene.set_free(c.x, c.y);
      }
    }
    // Walls are decoration; failing to fit one is not an error.
  }

  int next_id = 0;
  auto try_place = [&](ObjectInstance obj) {
    for (const auto& c : obj.cells)
      if (!scene.in_bounds(c.x, c.y) || !scene.is_free(c.x, c.y)) return false;
    scene.add_object(std::move(obj));
    if (detail::placement_ok(scene)) return true;
    scene.pop_object();
    return false;
  };

  for (int i = 0; i < params.n_parents; ++i) {
    const auto& cls = detail::pick(rng, params.parent_classes);
    bool ok = false;
    for (int attempt = 0; attempt < params.max_attempts && !ok; ++attempt) {
      static constexpr std::array<std::pair<int, int>, 3> kFootprints{{{2, 1}, {1, 2}, {2, 2}}};
      const auto [fw, fh] = kFootprints[uniform_index(rng, kFootprints.size())];
      const int x0 = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(w - 1 - fw)));
      const int y0 = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(h - 1 - fh)));
      ObjectInstance obj{next_id, cls.name, Role::Parent, {}, cls.height, fw * params.cell_size};
      for (int dy = 0; dy < fh; ++dy)
        for (int dx = 0; dx < fw; ++dx) obj.cells.push_back({x0 + dx, y0 + dy});
      ok = try_place(std::move(obj));
    }
    if (!ok) throw PlacementFailure(fmt::format("could not place parent #{} ({})", i, cls.name));
    ++next_id;
  }

  auto place_single = [&](const ClassSpec& cls, Role role, bool near_parent) {
    // Candidate anchors for near placement: preferred parent class if present, else all parents.
    std::vector<GridCell> anchors;
    if (near_parent) {
      for (const auto& o : scene.objects())
        if (o.role == Role::Parent && (cls.near.empty() || o.class_name == cls.near))
          anchors.insert(anchors.end(), o.cells.begin(), o.cells.end());
      if (anchors.empty())
        for (const auto& o : scene.objects())
          if (o.role == Role::Parent) anchors.insert(anchors.end(), o.cells.begin(), o.cells.end());
    }
    std::vector<GridCell> candidates;
    for (const auto& c : scene.free_cells()) {
      if (!near_parent) {
        candidates.push_back(c);
        continue;
      }
      for (const auto& a : anchors)
        if (detail::chebyshev(a, c) <= 2) {
          candidates.push_back(c);
          break;
        }
    }
    for (int attempt = 0; attempt < params.max_attempts && !candidates.empty(); ++attempt) {
      const auto c = candidates[uniform_index(rng, candidates.size())];
      ObjectInstance obj{next_id, cls.name, role, {c}, cls.height, params.cell_size};
      if (try_place(std::move(obj))) {
        ++next_id;
        return;
      }
    }
    throw PlacementFailure(fmt::format("could not place {} '{}'", to_string(role), cls.name));
  };

  for (int i = 0; i < params.n_targets; ++i) {
    const auto& cls = detail::pick(rng, params.target_classes);
    const bool near = bernoulli(rng, params.rho);
    place_single(cls, Role::Target, near);
  }
  for (int i = 0; i < params.n_distractors && !params.distractor_classes.empty(); ++i)
    place_single(detail::pick(rng, params.distractor_classes), Role::Distractor, false);

  return scene;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json scene_to_json(const Scene& s) {
  nlohmann::json rows = nlohmann::json::array();
  for (int y = 0; y < s.height(); ++y) {
    std::string row(static_cast<std::size_t>(s.width()), '.');
    for (int x = 0; x < s.width(); ++x) {
      if (s.is_wall(x, y)) row[static_cast<std::size_t>(x)] = '#';
      else if (s.object_at(x, y)) row[static_cast<std::size_t>(x)] = 'o';
    }
    rows.push_back(row);
  }
  nlohmann::json objs = nlohmann::json::array();
  for (const auto& o : s.objects()) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : o.cells) cells.push_back({c.x, c.y});
    objs.push_back({{"object_id", o.object_id},
                    {"class", o.class_name},
                    {"role", to_string(o.role)},
                    {"cells", cells},
                    {"physical_height", o.physical_height},
                    {"physical_width", o.physical_width}});
  }
  return {{"id", s.id()},          {"width", s.width()}, {"height", s.height()},
          {"cell_size", s.cell_size()}, {"seed", s.seed()},   {"occupancy", rows},
          {"objects", objs}};
}

inline Scene scene_from_json(const nlohmann::json& j) {
  try {
    Scene s(j.at("id").get<std::string>(), j.at("width").get<int>(), j.at("height").get<int>(),
            j.at("cell_size").get<double>(), j.at("seed").get<std::uint64_t>());
    const auto& rows = j.at("occupancy");
    if (rows.size() != static_cast<std::size_t>(s.height())) throw DataError("occupancy row count mismatch");
    for (int y = 0; y < s.height(); ++y) {
      const auto row = rows[static_cast<std::size_t>(y)].get<std::string>();
      if (row.size() != static_cast<std::size_t>(s.width())) throw DataError("occupancy row width mismatch");
      for (int x = 0; x < s.width(); ++x)
        if (row[static_cast<std::size_t>(x)] == '#') s.set_wall(x, y);
    }
    for (const auto& jo : j.at("objects")) {
      ObjectInstance o;
      o.object_id = jo.at("object_id").get<int>();
      o.class_name = jo.at("class").get<std::string>();
      o.role = role_from_string(jo.at("role").get<std::string>());
      for (const auto& c : jo.at("cells")) o.cells.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
      o.physical_height = jo.at("physical_height").get<double>();
      o.physical_width = jo.at("physical_width").get<double>();
      for (const auto& c : o.cells) {
        if (!s.in_bounds(c.x, c.y) || rows[static_cast<std::size_t>(c.y)].get<std::string>()[static_cast<std::size_t>(c.x)] != 'o')
          throw DataError(fmt::format("object {} cell ({},{}) not marked in occupancy", o.object_id, c.x, c.y));
      }
      s.add_object(std::move(o));
    }
    for (int y = 0; y < s.height(); ++y)
      for (int x = 0; x < s.width(); ++x)
        if (rows[static_cast<std::size_t>(y)].get<std::string>()[static_cast<std::size_t>(x)] == 'o' && !s.object_at(x, y))
          throw DataError(fmt::format("occupancy marks ({},{}) as object but no object owns it", x, y));
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed scene JSON: ") + e.what());
  } catch (const InvariantError& e) {
    throw DataError(std::string("malformed scene JSON: ") + e.what());
  }
}

}  // namespace objnav
