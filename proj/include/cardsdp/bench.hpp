#pragma once

// Benchmark harness: SDP bound vs branch-and-bound on a directory of
// instances, one row per (instance, aleph), plus per-(aleph, n) aggregates.
//
// Per-instance CSV header:
//   instance_name,n,aleph,ub,gap_exact,lb_sdp,gap_sdp,sdp_time,rank,status
// Aggregate CSV header:
//   aleph,n,gap_exact_min,gap_exact_avg,gap_exact_max,gap_sdp_min,gap_sdp_avg,gap_sdp_max,sdp_time_avg,count
//
// Gaps are fractions, not percent. Numbers print with 6 significant digits.
// Empty cells mean "undefined" (gap with ub ~ 0 disagreeing with lb, no
// portfolio) or "not recorded" (timings when disabled).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cardsdp/cardopt.hpp"
#include "cardsdp/exact.hpp"
#include "cardsdp/instance.hpp"

namespace cardsdp::bench {

struct BenchRow {
  std::string instance_name;
  int n = 0;
  int aleph = 0;
  std::optional<double> ub;
  std::optional<double> gap_exact;
  std::optional<double> lb_sdp;
  std::optional<double> gap_sdp;
  std::optional<double> sdp_time;
  int rank = 0;
  std::string status;
};

struct Stats {
  double min = 0.0;
  double avg = 0.0;
  double max = 0.0;
};

struct AggregateRow {
  int aleph = 0;
  int n = 0;
  std::optional<Stats> gap_exact;
  std::optional<Stats> gap_sdp;
  std::optional<double> sdp_time_avg;
  int count = 0;
};

struct BenchOptions {
  std::vector<int> alephs;        ///< empty: use each file's own aleph
  double time_limit = 90.0;       ///< seconds per branch-and-bound run
  int jobs = 1;
  bool timing = true;             ///< record wall times in the CSVs
  ipm::SolverConfig solver;
};

/// Runs the SDP pipeline and a seeded branch-and-bound on one instance.
/// Solver failures are recorded in `status`; the function does not throw.
inline BenchRow bench_instance(const std::string& name, const Instance& inst,
                               const BenchOptions& opt) {
  BenchRow row;
  row.instance_name = name;
  row.n = inst.n();
  row.aleph = inst.aleph();
  std::vector<std::string> flags;
  try {
    const cardopt::RunReport rep = cardopt::run(inst, opt.solver);
    row.rank = rep.rank;
    row.lb_sdp = rep.lb_sdp;
    if (opt.timing) row.sdp_time = rep.sdp_time;
    if (rep.sdp_status != ipm::Status::Optimal) {
      flags.push_back(std::string("sdp=") + ipm::to_string(rep.sdp_status));
    }

    exact::BranchAndBoundOptions bb_opt;
    bb_opt.time_limit = opt.time_limit;
    bb_opt.incumbent = rep.portfolio;
    const exact::ExactResult bb = exact::branch_and_bound(inst, bb_opt);
    if (bb.status != exact::ExactStatus::Proven) {
      flags.push_back(std::string("exact=") + exact::to_string(bb.status));
    }
    const double ub = std::min(bb.ub, rep.ub);
    if (std::isfinite(ub)) row.ub = ub;
    row.gap_exact = relative_gap(ub, bb.lb);
    row.gap_sdp = relative_gap(ub, rep.lb_sdp);
  } catch (const std::exception& e) {
    flags.push_back(std::string("error=") + e.what());
  }
  if (flags.empty()) {
    row.status = "ok";
  } else {
    for (std::size_t i = 0; i < flags.size(); ++i) row.status += (i ? ";" : "") + flags[i];
  }
  return row;
}

/// Canonical instance files (*.json) in lexicographic order.
inline std::vector<std::filesystem::path> list_instances(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ParseError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

/// Rows ordered by instance name, then aleph, whatever `jobs` is.
inline std::vector<BenchRow> run_bench(const std::filesystem::path& dir, const BenchOptions& opt) {
  struct Task {
    std::string name;
    std::filesystem::path path;
    std::optional<int> aleph;
  };
  std::vector<Task> tasks;
  for (const auto& f : list_instances(dir)) {
    const std::string name = f.stem().string();
    if (opt.alephs.empty()) {
      tasks.push_back({name, f, std::nullopt});
    } else {
      std::vector<int> alephs = opt.alephs;
      std::sort(alephs.begin(), alephs.end());
      alephs.erase(std::unique(alephs.begin(), alephs.end()), alephs.end());
      for (int a : alephs) tasks.push_back({name, f, a});
    }
  }

  std::vector<BenchRow> rows(tasks.size());
  auto work = [&](std::size_t i) {
    const Task& t = tasks[i];
    try {
      Instance inst = load_instance(t.path);
      if (t.aleph) inst = inst.with_aleph(std::min(*t.aleph, inst.n()));
      rows[i] = bench_instance(t.name, inst, opt);
    } catch (const std::exception& e) {
      rows[i].instance_name = t.name;
      rows[i].aleph = t.aleph.value_or(0);
      rows[i].status = std::string("error=") + e.what();
    }
  };

  const int jobs = std::max(1, opt.jobs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) work(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  return rows;
}

inline std::optional<Stats> stats_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  Stats s;
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  s.avg = std::clamp(sum / double(v.size()), s.min, s.max);
  return s;
}

/// Groups rows by (aleph, n), ordered by aleph then n. Undefined gaps and
/// missing timings are left out of the statistics.
inline std::vector<AggregateRow> aggregate(const std::vector<BenchRow>& rows) {
  std::map<std::pair<int, int>, std::vector<const BenchRow*>> groups;
  for (const auto& r : rows) groups[{r.aleph, r.n}].push_back(&r);
  std::vector<AggregateRow> out;
  for (const auto& [key, members] : groups) {
    AggregateRow a;
    a.aleph = key.first;
    a.n = key.second;
    a.count = static_cast<int>(members.size());
    std::vector<double> ge, gs, t;
    for (const BenchRow* r : members) {
      if (r->gap_exact) ge.push_back(*r->gap_exact);
      if (r->gap_sdp) gs.push_back(*r->gap_sdp);
      if (r->sdp_time) t.push_back(*r->sdp_time);
    }
    a.gap_exact = stats_of(ge);
    a.gap_sdp = stats_of(gs);
    if (auto st = stats_of(t)) a.sdp_time_avg = st->avg;
    out.push_back(a);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string cell(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string();
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline constexpr const char* kBenchHeader =
    "instance_name,n,aleph,ub,gap_exact,lb_sdp,gap_sdp,sdp_time,rank,status";
inline constexpr const char* kAggregateHeader =
    "aleph,n,gap_exact_min,gap_exact_avg,gap_exact_max,gap_sdp_min,gap_sdp_avg,gap_sdp_max,"
    "sdp_time_avg,count";

inline void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out) {
  out << kBenchHeader << "\n";
  for (const auto& r : rows) {
    out << csv_escape(r.instance_name) << ',' << r.n << ',' << r.aleph << ',' << cell(r.ub) << ','
        << cell(r.gap_exact) << ',' << cell(r.lb_sdp) << ',' << cell(r.gap_sdp) << ','
        << cell(r.sdp_time) << ',' << r.rank << ',' << csv_escape(r.status) << "\n";
  }
}

inline void write_aggregate_csv(const std::vector<AggregateRow>& rows, std::ostream& out) {
  out << kAggregateHeader << "\n";
  auto stats = [](const std::optional<Stats>& s) {
    if (!s) return std::string(",,");
    return format_number(s->min) + "," + format_number(s->avg) + "," + format_number(s->max);
  };
  for (const auto& a : rows) {
    out << a.aleph << ',' << a.n << ',' << stats(a.gap_exact) << ',' << stats(a.gap_sdp) << ','
        << cell(a.sdp_time_avg) << ',' << a.count << "\n";
  }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

inline std::optional<double> parse_cell(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

}  // namespace detail

/// Reads back what write_bench_csv wrote.
inline std::vector<BenchRow> parse_bench_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kBenchHeader) {
    throw ParseError("unexpected bench CSV header");
  }
  std::vector<BenchRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 10) throw ParseError("bench CSV row needs 10 fields: " + line);
    BenchRow r;
    r.instance_name = f[0];
    r.n = std::stoi(f[1]);
    r.aleph = std::stoi(f[2]);
    r.ub = detail::parse_cell(f[3]);
    r.gap_exact = detail::parse_cell(f[4]);
    r.lb_sdp = detail::parse_cell(f[5]);
    r.gap_sdp = detail::parse_cell(f[6]);
    r.sdp_time = detail::parse_cell(f[7]);
    r.rank = std::stoi(f[8]);
    r.status = f[9];
    rows.push_back(std::move(r));
  }
  return rows;
}

/// `results.csv` -> `results_aggregate.csv`.
inline std::filesystem::path aggregate_path(const std::filesystem::path& out) {
  std::filesystem::path p = out;
  p.replace_filename(out.stem().string() + "_aggregate.csv");
  return p;
}

}  // namespace cardsdp::bench
