#pragma once

// Success rate and SPL over L >= L_min strata, aggregated across run seeds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <fmt/format.h>

#include "objnav/agent.hpp"
#include "objnav/errors.hpp"
#include "objnav/shaping.hpp"

namespace objnav {

namespace detail {

inline std::vector<const EpisodeResult*> stratum(std::span<const EpisodeResult> results, int l_min) {
  std::vector<const EpisodeResult*> out;
  for (const auto& r : results)
    if (r.optimal_steps >= l_min) out.push_back(&r);
  if (out.empty()) throw EmptyStratum(fmt::format("no episodes with optimal length >= {}", l_min));
  return out;
}

}  // namespace detail

/// Percentage of successful episodes among those with optimal_steps >= l_min.
inline double success_rate(std::span<const EpisodeResult> results, int l_min) {
  const auto kept = detail::stratum(results, l_min);
  const auto wins = std::count_if(kept.begin(), kept.end(), [](const EpisodeResult* r) { return r->success; });
  return 100.0 * static_cast<double>(wins) / static_cast<double>(kept.size());
}

/// 100 / N * sum_i S_i * l_i / max(p_i, l_i).
inline double spl(std::span<const EpisodeResult> results, int l_min) {
  const auto kept = detail::stratum(results, l_min);
  double sum = 0.0;
  for (const auto* r : kept) {
    if (r->optimal_steps <= 0) throw InvalidLength(fmt::format("episode in {} has optimal length 0", r->scene_id));
    if (!r->success) continue;
    sum += static_cast<double>(r->optimal_steps) / std::max(r->taken_steps, r->optimal_steps);
  }
  return 100.0 * sum / static_cast<double>(kept.size());
}

enum class Metric { SR, SPL };
inline const char* to_string(Metric m) { return m == Metric::SR ? "sr" : "spl"; }

struct MetricReport {
  RewardMode mode = RewardMode::Bin;
  int l_min = 1;
  double success_rate_pct = 0.0;
  double spl_pct = 0.0;
  std::size_t n_episodes = 0;
  std::uint64_t run_seed = 0;
};

inline MetricReport make_report(std::span<const EpisodeResult> results, RewardMode mode, int l_min,
                                std::uint64_t run_seed) {
  MetricReport rep;
  rep.mode = mode;
  rep.l_min = l_min;
  rep.run_seed = run_seed;
  rep.success_rate_pct = success_rate(results, l_min);
  rep.spl_pct = spl(results, l_min);
  rep.n_episodes = detail::stratum(results, l_min).size();
  return rep;
}

struct AggregateCell {
  double mean = 0.0;
  double std = 0.0;  // population
  int n_runs = 0;
};

inline AggregateCell aggregate(std::span<const double> values) {
  if (values.empty()) throw EmptyStratum("aggregate needs at least one run");
  AggregateCell cell;
  cell.n_runs = static_cast<int>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  cell.mean = sum / values.size();
  double ss = 0.0;
  for (double v : values) ss += (v - cell.mean) * (v - cell.mean);
  cell.std = std::sqrt(ss / values.size());
  return cell;
}

inline AggregateCell aggregate(std::span<const MetricReport> reports, Metric metric) {
  std::vector<double> values;
  for (const auto& r : reports) values.push_back(metric == Metric::SR ? r.success_rate_pct : r.spl_pct);
  return aggregate(values);
}

using CellKey = std::tuple<RewardMode, Metric, int>;  // (mode, metric, l_min)
using CellMap = std::map<CellKey, AggregateCell>;

struct RenderedTable {
  std::string text;
  std::string csv;
};

/// Rows = reward modes, columns = metric x L_min. Column maxima (ties
/// included) are marked with '*'.
inline RenderedTable compare_table(const CellMap& cells, const std::vector<int>& l_mins = {1, 5}) {
  for (auto mode : kAllModes) {
    const bool present = std::any_of(cells.begin(), cells.end(),
                                     [&](const auto& kv) { return std::get<0>(kv.first) == mode; });
    if (!present) throw MissingMode(fmt::format("no results for reward mode '{}'", to_string(mode)));
  }
  std::vector<std::pair<Metric, int>> columns;
  for (auto metric : {Metric::SR, Metric::SPL})
    for (int l : l_mins) columns.emplace_back(metric, l);

  std::vector<double> col_max(columns.size(), -1.0);
  for (std::size_t c = 0; c < columns.size(); ++c)
    for (auto mode : kAllModes) {
      const auto it = cells.find({mode, columns[c].first, columns[c].second});
      if (it == cells.end())
        throw MissingMode(fmt::format("no {} L>={} cell for mode '{}'", to_string(columns[c].first),
                                      columns[c].second, to_string(mode)));
      col_max[c] = std::max(col_max[c], it->second.mean);
    }

  RenderedTable out;
  std::string header = fmt::format("{:<8}", "mode");
  std::string csv = "mode";
  for (const auto& [metric, l] : columns) {
    const auto name = fmt::format("{} L>={}", metric == Metric::SR ? "SR" : "SPL", l);
    header += fmt::format(" | {:>16}", name);
    csv += fmt::format(",{}_l{}_mean,{}_l{}_std,{}_l{}_max", to_string(metric), l, to_string(metric), l,
                       to_string(metric), l);
  }
  out.text = header + "\n" + std::string(header.size(), '-') + "\n";
  out.csv = csv + "\n";
  for (auto mode : kAllModes) {
    std::string line = fmt::format("{:<8}", to_string(mode));
    std::string row = to_string(mode);
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const auto& cell = cells.at({mode, columns[c].first, columns[c].second});
      const bool is_max = cell.mean == col_max[c];
      line += fmt::format(" | {:>16}", fmt::format("{}{:.1f} ({:.1f})", is_max ? "*" : "", cell.mean, cell.std));
      row += fmt::format(",{:.4f},{:.4f},{}", cell.mean, cell.std, is_max ? 1 : 0);
    }
    out.text += line + "\n";
    out.csv += row + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Results file

inline constexpr const char* kResultsHeader =
    "run_seed,scene_id,target_class,mode,success,taken_steps,optimal_steps,cum_reward";

struct ResultRow {
  std::uint64_t run_seed = 0;
  RewardMode mode = RewardMode::Bin;
  EpisodeResult result;
};

inline std::string format_result_row(const ResultRow& r) {
  return fmt::format("{},{},{},{},{},{},{},{:.17g}", r.run_seed, r.result.scene_id, r.result.target_class,
                     to_string(r.mode), r.result.success ? 1 : 0, r.result.taken_steps, r.result.optimal_steps,
                     r.result.cumulative_reward);
}

inline std::vector<ResultRow> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) throw DataError("results CSV: bad header");
  std::vector<ResultRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 8) throw DataError(fmt::format("results CSV line {}: expected 8 fields", lineno));
    try {
      ResultRow r;
      r.run_seed = std::stoull(f[0]);
      r.result.scene_id = f[1];
      r.result.target_class = f[2];
      r.mode = reward_mode_from_string(f[3]);
      r.result.success = f[4] == "1";
      r.result.taken_steps = std::stoi(f[5]);
      r.result.optimal_steps = std::stoi(f[6]);
      r.result.cumulative_reward = std::stod(f[7]);
      rows.push_back(std::move(r));
    } catch (const ConfigError& e) {
      throw DataError(fmt::format("results CSV line {}: {}", lineno, e.what()));
    } catch (const std::logic_error&) {
      throw DataError(fmt::format("results CSV line {}: bad number", lineno));
    }
  }
  return rows;
}

/// Per (mode, run_seed, l_min) reports from raw rows.
inline std::vector<MetricReport> reports_from_rows(const std::vector<ResultRow>& rows, const std::vector<int>& l_mins) {
  std::map<std::pair<RewardMode, std::uint64_t>, std::vector<EpisodeResult>> grouped;
  for (const auto& r : rows) grouped[{r.mode, r.run_seed}].push_back(r.result);
  std::vector<MetricReport> out;
  for (const auto& [key, results] : grouped)
    for (int l : l_mins) out.push_back(make_report(results, key.first, l, key.second));
  return out;
}

/// Aggregates reports into (mode, metric, l_min) cells.
inline CellMap aggregate_cells(const std::vector<MetricReport>& reports) {
  std::map<std::pair<RewardMode, int>, std::vector<MetricReport>> groups;
  for (const auto& r : reports) groups[{r.mode, r.l_min}].push_back(r);
  CellMap cells;
  for (const auto& [key, group] : groups)
    for (auto metric : {Metric::SR, Metric::SPL}) cells[{key.first, metric, key.second}] = aggregate(group, metric);
  return cells;
}

/// Report CSV: `mode,metric,l_min,mean,std,n_runs`.
inline std::string report_csv(const CellMap& cells) {
  std::string out = "mode,metric,l_min,mean,std,n_runs\n";
  for (const auto& [key, cell] : cells) {
    const auto& [mode, metric, l] = key;
    out += fmt::format("{},{},{},{:.6f},{:.6f},{}\n", to_string(mode), to_string(metric), l, cell.mean, cell.std,
                       cell.n_runs);
  }
  return out;
}

}  // namespace objnav
