#pragma once

// Pr(t|p): per target class, a normalized distribution over parent classes
// built from how close instances sit across a scene corpus.

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "objnav/errors.hpp"
#include "objnav/scene.hpp"

namespace objnav {

class ClosenessTable {
 public:
  using Key = std::pair<std::string, std::string>;  // (target, parent)

  ClosenessTable() = default;
  ClosenessTable(std::map<Key, double> entries, std::vector<std::string> target_classes,
                 std::vector<std::string> parent_classes)
      : entries_(std::move(entries)),
        targets_(std::move(target_classes)),
        parents_(std::move(parent_classes)) {}

  const std::map<Key, double>& entries() const { return entries_; }
  const std::vector<std::string>& target_classes() const { return targets_; }
  const std::vector<std::string>& parent_classes() const { return parents_; }

  bool has_target(const std::string& t) const {
    return std::find(targets_.begin(), targets_.end(), t) != targets_.end();
  }

  /// Stored probability; 0 for parents outside t's support.
  double lookup(const std::string& target, const std::string& parent) const {
    if (!has_target(target)) throw UnknownTarget(target);
    const auto it = entries_.find({target, parent});
    return it == entries_.end() ? 0.0 : it->second;
  }

  friend bool operator==(const ClosenessTable&, const ClosenessTable&) = default;

 private:
  std::map<Key, double> entries_;
  std::vector<std::string> targets_;
  std::vector<std::string> parents_;
};

inline double lookup(const ClosenessTable& table, const std::string& target, const std::string& parent) {
  return table.lookup(target, parent);
}

/// Smallest center-to-center distance in meters between any cell of a and any cell of b.
inline double instance_distance(const ObjectInstance& a, const ObjectInstance& b, double cell_size) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& ca : a.cells)
    for (const auto& cb : b.cells) {
      const double dx = ca.x - cb.x, dy = ca.y - cb.y;
      best = std::min(best, std::sqrt(dx * dx + dy * dy));
    }
  return best * cell_size;
}

/// w(t,p) = mean over scenes containing both classes of 1 / (1 + min distance),
/// then Pr(t|p) = w(t,p) / sum_p' w(t,p').
inline ClosenessTable fit_closeness(const std::vector<Scene>& scenes) {
  if (scenes.empty()) throw DataError("closeness fit needs at least one scene");
  std::map<ClosenessTable::Key, std::pair<double, int>> acc;  // sum, count
  std::set<std::string> targets, parents;

  for (const auto& scene : scenes) {
    std::map<ClosenessTable::Key, double> nearest;
    for (const auto& t : scene.objects()) {
      if (t.role != Role::Target) continue;
      targets.insert(t.class_name);
      for (const auto& p : scene.objects()) {
        if (p.role != Role::Parent) continue;
        parents.insert(p.class_name);
        const double d = instance_distance(t, p, scene.cell_size());
        auto [it, inserted] = nearest.try_emplace({t.class_name, p.class_name}, d);
        if (!inserted) it->second = std::min(it->second, d);
      }
    }
    for (const auto& o : scene.objects())
      if (o.role == Role::Parent) parents.insert(o.class_name);
    for (const auto& [key, d] : nearest) {
      auto& [sum, count] = acc[key];
      sum += 1.0 / (1.0 + d);
      ++count;
    }
  }

  std::map<ClosenessTable::Key, double> entries;
  for (const auto& t : targets) {
    double total = 0.0;
    for (const auto& p : parents) {
      const auto it = acc.find({t, p});
      if (it != acc.end()) total += it->second.first / it->second.second;
    }
    if (total <= 0.0) throw NoParentCoverage(t);
    for (const auto& p : parents) {
      const auto it = acc.find({t, p});
      if (it != acc.end()) entries[{t, p}] = (it->second.first / it->second.second) / total;
    }
  }
  return {std::move(entries), {targets.begin(), targets.end()}, {parents.begin(), parents.end()}};
}

// CSV: header `target,parent,prob`, 9 decimals, rows in (target, parent) order.

inline void write_closeness_csv(std::ostream& out, const ClosenessTable& table) {
  out << "target,parent,prob\n";
  for (const auto& [key, prob] : table.entries()) out << fmt::format("{},{},{:.9f}\n", key.first, key.second, prob);
}

inline std::string closeness_csv(const ClosenessTable& table) {
  std::ostringstream os;
  write_closeness_csv(os, table);
  return os.str();
}

inline ClosenessTable read_closeness_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "target,parent,prob") throw DataError("closeness CSV: bad header");
  std::map<ClosenessTable::Key, double> entries;
  std::set<std::string> targets, parents;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c2 == std::string::npos) throw DataError(fmt::format("closeness CSV line {}: expected 3 fields", lineno));
    std::string t = line.substr(0, c1), p = line.substr(c1 + 1, c2 - c1 - 1);
    double prob = 0.0;
    try {
      std::size_t used = 0;
      prob = std::stod(line.substr(c2 + 1), &used);
    } catch (const std::exception&) {
      throw DataError(fmt::format("closeness CSV line {}: bad probability", lineno));
    }
    if (!(prob >= 0.0 && prob <= 1.0)) throw DataError(fmt::format("closeness CSV line {}: probability out of range", lineno));
    targets.insert(t);
    parents.insert(p);
    entries[{std::move(t), std::move(p)}] = prob;
  }
  // Nine printed decimals bound the rounding drift of a row sum.
  for (const auto& t : targets) {
    double sum = 0.0;
    for (const auto& [key, prob] : entries)
      if (key.first == t) sum += prob;
    if (std::abs(sum - 1.0) > 1e-6) throw DataError(fmt::format("closeness CSV: row sum for '{}' is {}", t, sum));
  }
  return {std::move(entries), {targets.begin(), targets.end()}, {parents.begin(), parents.end()}};
}

}  // namespace objnav
