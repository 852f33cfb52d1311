// Acceptance suite: one PASS / FAIL line per criterion. Criterion 6 reports
// FLAG instead of failing when the SPL ordering inverts.

#include <chrono>
#include <cstring>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "fixtures.hpp"
#include "objnav/objnav.hpp"
#include "oracles.hpp"
#include "results_gen.hpp"
#include "temp_dir.hpp"
#include "trace_gen.hpp"

using namespace objnav;

namespace {

enum class Verdict { Pass, Fail, Flag };

struct Outcome {
  Verdict verdict = Verdict::Pass;
  std::string detail;
};

Outcome fail(std::string why) { return {Verdict::Fail, std::move(why)}; }

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

// 1 ------------------------------------------------------------------------
Outcome shaping_formulas() {
  const RewardSpec s;  // k = 0.1, m = -0.15, c = 1
  const std::pair<double, double> depth_cases[] = {{0.0, 0.1}, {2.0, 0.07}, {20.0 / 3.0, 0.0}, {10.0, 0.0}};
  for (auto [d, want] : depth_cases)
    if (std::abs(k_depth(d, s) - want) > 1e-12) return fail(fmt::format("k_depth({}) = {}", d, k_depth(d, s)));
  // A1/A2 ratios 1, 1/4, 4.
  const std::tuple<double, double, double> area_cases[] = {{64, 64, 0.0}, {16, 64, 0.05}, {64, 16, 0.0}};
  for (auto [a1, a2, want] : area_cases)
    if (std::abs(k_area(a1, a2, s) - want) > 1e-12) return fail(fmt::format("k_area({}, {})", a1, a2));
  double prev_d = s.k, prev_a = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double kd = k_depth(10.0 * i / 9999.0, s);
    const double ka = k_area(500.0, 1.0 + i, s);
    if (kd > prev_d || kd < 0.0 || kd > s.k) return fail(fmt::format("k_depth sweep at point {}", i));
    if (ka < prev_a || ka < 0.0 || ka > s.k) return fail(fmt::format("k_area sweep at point {}", i));
    prev_d = kd;
    prev_a = ka;
  }
  return {Verdict::Pass, "hand values within 1e-12; 10^4-point sweeps monotone and within [0, k]"};
}

// 2 ------------------------------------------------------------------------
Outcome ledger_soundness() {
  Rng rng(20240601);
  for (int i = 0; i < 1000; ++i) {
    const auto tr = objnav::testing::random_trace(rng, i % 2 ? RewardMode::Area : RewardMode::Depth);
    const auto out = objnav::testing::replay(tr);
    const auto best = oracle::max_instantaneous_credit(tr.spec, tr.table, tr.target, tr.start, tr.views);
    for (const auto& [id, v] : best) {
      const auto it = out.state.credited.find(id);
      const double got = it == out.state.credited.end() ? 0.0 : it->second;
      if (std::abs(got - v) > 1e-12) return fail(fmt::format("trace {} object {}: credit {} vs max {}", i, id, got, v));
    }
    double shaping = -objnav::testing::terminal_term(tr);
    for (double r : out.rewards) shaping += r - tr.spec.step_penalty;
    if (shaping > objnav::testing::shaping_bound(tr) + 1e-9) return fail(fmt::format("trace {} exceeds bound", i));
  }
  return {Verdict::Pass, "1000 traces: credit == max instantaneous value; bonus within bound"};
}

// 3 ------------------------------------------------------------------------
Outcome metric_exactness() {
  Rng rng(77);
  for (int i = 0; i < 1000; ++i) {
    const auto rs = objnav::testing::random_results(rng);
    for (int l : {1, 5}) {
      const double sr = success_rate(rs, l), s = spl(rs, l);
      if (std::abs(sr - oracle::recount_sr(rs, l)) > 1e-9) return fail(fmt::format("SR list {} L>={}", i, l));
      if (std::abs(s - oracle::recount_spl(rs, l)) > 1e-9) return fail(fmt::format("SPL list {} L>={}", i, l));
      if (s > sr + 1e-12) return fail(fmt::format("SPL > SR on list {}", i));
    }
  }
  return {Verdict::Pass, "1000 lists x 2 strata match the recount; SPL <= SR"};
}

// 4 ------------------------------------------------------------------------
Outcome oracle_equivalence() {
  const Camera cam;
  const auto params = objnav::testing::default_params();
  Rng rng(4);
  for (int k = 0; k < 100; ++k) {
    const auto s = generate_scene(derive_seed(4, k), params);
    const auto free = s.free_cells();
    const auto c = free[uniform_index(rng, free.size())];
    const AgentPose p{c.x, c.y, kHeadings[uniform_index(rng, 4)]};
    const auto obs = render(s, p, cam);
    const auto ref = oracle::brute_force_render(s, p, cam);
    if (obs.detections.size() != ref.boxes.size()) return fail(fmt::format("render pair {}: detection count", k));
    for (const auto& d : obs.detections) {
      const auto it = ref.boxes.find(d.object_id);
      if (it == ref.boxes.end() || it->second.area() != d.area ||
          std::abs(ref.mean_depth.at(d.object_id) - d.mean_depth) > 1e-9)
        return fail(fmt::format("render pair {}: object {}", k, d.object_id));
    }
  }
  int queries = 0;
  for (int k = 0; queries < 100; ++k) {
    const auto s = generate_scene(derive_seed(5, k), params);
    const ObservationCache cache(s, cam);
    const auto free = s.free_cells();
    const auto targets = s.classes_with_role(Role::Target);
    for (int j = 0; j < 10; ++j, ++queries) {
      const auto c = free[uniform_index(rng, free.size())];
      const AgentPose start{c.x, c.y, kHeadings[uniform_index(rng, 4)]};
      const auto& t = targets[uniform_index(rng, targets.size())];
      if (shortest_path_length(cache, start, t) != oracle::dijkstra_path_length(s, start, t, cam, 1.0))
        return fail(fmt::format("path query {}", queries));
    }
  }
  return {Verdict::Pass, "100 render pairs and 100 path queries agree with the oracles"};
}

// 5, 6, 7 --------------------------------------------------------------------
struct BenchmarkRuns {
  ReportOutput report;
  std::map<std::string, std::string> first, second;
  std::string error;
};

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path());
  return files;
}

BenchmarkRuns& benchmark() {
  static BenchmarkRuns runs = [] {
    BenchmarkRuns r;
    try {
      objnav::testing::TempDir a("bench-a"), b("bench-b");
      auto cfg = load_config_file(OBJNAV_SOURCE_DIR "/configs/benchmark.toml");
      cfg.output_dir = a.path();
      r.report = run_all(cfg);
      r.first = snapshot(a.path());
      cfg.output_dir = b.path();
      run_all(cfg);
      r.second = snapshot(b.path());
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    return r;
  }();
  return runs;
}

std::map<std::uint64_t, double> per_seed(const ReportOutput& rep, RewardMode mode, int l_min, Metric metric) {
  std::map<std::uint64_t, double> out;
  for (const auto& r : rep.reports)
    if (r.mode == mode && r.l_min == l_min) out[r.run_seed] = metric == Metric::SR ? r.success_rate_pct : r.spl_pct;
  return out;
}

Outcome sr_long_paths() {
  const auto& b = benchmark();
  if (!b.error.empty()) return fail(b.error);
  const auto& cells = b.report.cells;
  const auto mean = [&](RewardMode m) { return cells.at({m, Metric::SR, 5}).mean; };
  const auto bin = per_seed(b.report, RewardMode::Bin, 5, Metric::SR);
  std::string detail = fmt::format("SR L>=5 bin {:.1f}", mean(RewardMode::Bin));
  bool ok = true;
  for (auto mode : {RewardMode::Area, RewardMode::Depth}) {
    const auto other = per_seed(b.report, mode, 5, Metric::SR);
    int wins = 0;
    for (const auto& [seed, v] : other) wins += v - bin.at(seed) > 0.0;
    detail += fmt::format(", {} {:.1f} (ahead in {}/{} seeds)", to_string(mode), mean(mode), wins, other.size());
    ok = ok && mean(mode) >= mean(RewardMode::Bin) && wins >= 4;
  }
  return {ok ? Verdict::Pass : Verdict::Fail, detail};
}

Outcome spl_binary_efficiency() {
  const auto& b = benchmark();
  if (!b.error.empty()) return fail(b.error);
  const double bin = b.report.cells.at({RewardMode::Bin, Metric::SPL, 1}).mean;
  const double area = b.report.cells.at({RewardMode::Area, Metric::SPL, 1}).mean;
  const auto detail = fmt::format("SPL L>=1 bin {:.1f} vs area {:.1f} (tolerance 2 points)", bin, area);
  if (bin >= area - 2.0) return {Verdict::Pass, detail};
  return {Verdict::Flag, detail + "; ordering inverted, flagged for investigation"};
}

Outcome end_to_end_determinism() {
  const auto& b = benchmark();
  if (!b.error.empty()) return fail(b.error);
  for (const char* f : {"results.csv", "report.csv", "report_table.txt", "report_table.csv"})
    if (!b.first.count(f) || b.first.at(f) != b.second.at(f)) return fail(fmt::format("{} differs between runs", f));
  if (b.first != b.second) return fail("some pipeline artifact differs between runs");
  return {Verdict::Pass, fmt::format("two runs, {} files byte-identical", b.first.size())};
}

// 8 ------------------------------------------------------------------------
Outcome degenerate_inputs() {
  const RewardSpec s;
  for (double a1 = 1; a1 <= 512; a1 *= 2)
    for (double a2 = 1; a2 <= a1; a2 += 1)
      if (k_area(a1, a2, s) != 0.0) return fail(fmt::format("k_area({}, {}) != 0", a1, a2));
  for (double d = 20.0 / 3.0; d < 50.0; d += 0.01)
    if (k_depth(d, s) != 0.0) return fail(fmt::format("k_depth({}) != 0", d));

  // Through the ledger: shrinking boxes and far sightings pay nothing.
  const auto table = objnav::testing::table_with({{{"Mug", "Table"}, 1.0}});
  RewardSpec area = s, depth = s;
  area.mode = RewardMode::Area;
  depth.mode = RewardMode::Depth;
  ShapingState sa, sd;
  for (long a = 400; a >= 1; a -= 7) {
    const Observation obs{{}, {objnav::testing::make_detection(0, "Table", Role::Parent, a, 7.0 + a)}};
    if (apply_step_reward(area, table, "Mug", obs, sa, Terminal::None) != s.step_penalty)
      return fail("area mode paid for a shrinking box");
    if (apply_step_reward(depth, table, "Mug", obs, sd, Terminal::None) != s.step_penalty)
      return fail("depth mode paid beyond the zero crossing");
  }

  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    auto tr = objnav::testing::random_trace(rng, RewardMode::Depth);
    if (i % 2) {
      tr.spec.m = 0.0;
      tr.spec.c = 0.0;
    } else {
      tr.spec.mode = RewardMode::Area;
      for (auto& obs : tr.views)
        for (auto& d : obs.detections) {
          d.bbox = {0, 0, 0, 0};
          d.area = 1;
        }
    }
    auto bin = tr;
    bin.spec.mode = RewardMode::Bin;
    const auto x = objnav::testing::replay(tr).rewards, y = objnav::testing::replay(bin).rewards;
    for (std::size_t k = 0; k < x.size(); ++k)
      if (!same_bits(x[k], y[k])) return fail(fmt::format("trace {} step {} differs from bin", i, k));
  }
  return {Verdict::Pass, "A2 <= A1 and d >= 20/3 m pay 0; k' = 0 streams bit-identical to bin on 500 traces"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
    double limit_s;  // 0: no hard limit
  };
  const std::vector<Criterion> criteria{
      {1, "shaping formula exactness", shaping_formulas, 1.0},
      {2, "ledger soundness", ledger_soundness, 10.0},
      {3, "metric exactness", metric_exactness, 1.0},
      {4, "oracle equivalence", oracle_equivalence, 30.0},
      {5, "SR on long paths: area, depth >= bin", sr_long_paths, 0.0},
      {6, "SPL: bin >= area - 2", spl_binary_efficiency, 0.0},
      {7, "end-to-end determinism", end_to_end_determinism, 0.0},
      {8, "degenerate inputs", degenerate_inputs, 0.0},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = fail(fmt::format("exception: {}", e.what()));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0.0 && secs > c.limit_s && o.verdict == Verdict::Pass)
      o = fail(fmt::format("{} (took {:.2f}s, limit {:.0f}s)", o.detail, secs, c.limit_s));
    const char* tag = o.verdict == Verdict::Pass ? "PASS" : o.verdict == Verdict::Fail ? "FAIL" : "FLAG";
    fmt::print("[{}] criterion {}: {} - {} ({:.2f}s)\n", tag, c.id, c.name, o.detail, secs);
    failures += o.verdict == Verdict::Fail;
  }
  fmt::print("{} of {} criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
