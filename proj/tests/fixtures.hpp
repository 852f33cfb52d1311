#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "objnav/objnav.hpp"

namespace objnav::testing {

/// Empty room with a wall border.
inline Scene make_room(int w, int h, double cell_size = 0.25, std::string id = "room") {
  Scene s(std::move(id), w, h, cell_size, 0);
  for (int x = 0; x < w; ++x) {
    s.set_wall(x, 0);
    s.set_wall(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    s.set_wall(0, y);
    s.set_wall(w - 1, y);
  }
  return s;
}

inline int add_object(Scene& s, const std::string& cls, Role role, std::vector<GridCell> cells, double height) {
  const int id = static_cast<int>(s.objects().size());
  s.add_object({id, cls, role, std::move(cells), height, s.cell_size()});
  return id;
}

inline GenParams default_params() {
  GenParams p;
  p.width = 16;
  p.height = 16;
  p.target_classes = {{"Mug", 0.15, "Table"}, {"Apple", 0.12, "CounterTop"}};
  p.parent_classes = {{"Table", 0.75, ""}, {"CounterTop", 0.9, ""}, {"Sofa", 0.8, ""}};
  p.distractor_classes = {{"Chair", 0.6, ""}};
  p.n_parents = 3;
  p.n_targets = 2;
  p.n_distractors = 1;
  p.rho = 0.8;
  p.wall_segments = 3;
  return p;
}

inline Detection make_detection(int id, const std::string& cls, Role role, long area, double depth) {
  Detection d;
  d.object_id = id;
  d.class_name = cls;
  d.role = role;
  d.bbox = {0, 0, static_cast<int>(area) - 1, 0};
  d.area = area;
  d.mean_depth = depth;
  return d;
}

inline ClosenessTable table_with(std::map<ClosenessTable::Key, double> entries) {
  std::set<std::string> t, p;
  for (const auto& [k, v] : entries) {
    t.insert(k.first);
    p.insert(k.second);
  }
  return {std::move(entries), {t.begin(), t.end()}, {p.begin(), p.end()}};
}

}  // namespace objnav::testing
