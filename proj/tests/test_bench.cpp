#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"

using namespace cardsdp;
using namespace cardsdp::bench;

namespace {

class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("cardsdp_bench_" + name)) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

void write_suite(const std::filesystem::path& dir, int count, int n) {
  for (int i = 0; i < count; ++i) {
    GenSpec spec;
    spec.n = n;
    spec.seed = 500 + i;
    save_instance(generate_instance(spec), dir / ("inst" + std::to_string(i) + ".json"));
  }
}

std::string csv_of(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  write_bench_csv(rows, out);
  return out.str();
}

BenchRow row(int aleph, int n, std::optional<double> ge, std::optional<double> gs,
             std::optional<double> t) {
  BenchRow r;
  r.instance_name = "r";
  r.aleph = aleph;
  r.n = n;
  r.gap_exact = ge;
  r.gap_sdp = gs;
  r.sdp_time = t;
  return r;
}

}  // namespace

TEST(Bench, CountsRowsAndAggregates) {
  TempDir dir("count");
  write_suite(dir.path(), 3, 7);
  BenchOptions opt;
  opt.alephs = {3, 2};
  const auto rows = run_bench(dir.path(), opt);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(aggregate(rows).size(), 2u);
  EXPECT_EQ(rows[0].instance_name, "inst0");
  EXPECT_EQ(rows[0].aleph, 2);
  EXPECT_EQ(rows[1].aleph, 3);
  EXPECT_EQ(rows[5].instance_name, "inst2");
  for (const auto& r : rows) {
    EXPECT_EQ(r.status, "ok");
    ASSERT_TRUE(r.gap_exact && r.gap_sdp && r.sdp_time && r.ub && r.lb_sdp);
    EXPECT_GE(*r.gap_sdp, -1e-9);
    EXPECT_LE(*r.gap_sdp, 1.0);
    EXPECT_LE(*r.gap_exact, 1e-8);
    EXPECT_GE(*r.sdp_time, 0.0);
  }
}

TEST(Bench, AggregateArithmetic) {
  const std::vector<BenchRow> rows{
      row(2, 10, 0.1, 0.0, 1.0), row(2, 10, 0.3, 0.02, 2.0), row(2, 10, std::nullopt, 0.01, 3.0),
      row(3, 10, 0.5, 0.5, std::nullopt), row(2, 8, 0.0, 0.0, 4.0)};
  const auto agg = aggregate(rows);
  ASSERT_EQ(agg.size(), 3u);
  EXPECT_EQ(agg[0].aleph, 2);
  EXPECT_EQ(agg[0].n, 8);
  EXPECT_EQ(agg[1].n, 10);
  EXPECT_EQ(agg[2].aleph, 3);

  const auto& a = agg[1];
  EXPECT_EQ(a.count, 3);
  ASSERT_TRUE(a.gap_exact && a.gap_sdp && a.sdp_time_avg);
  EXPECT_DOUBLE_EQ(a.gap_exact->min, 0.1);
  EXPECT_NEAR(a.gap_exact->avg, 0.2, 1e-15);
  EXPECT_DOUBLE_EQ(a.gap_exact->max, 0.3);
  EXPECT_DOUBLE_EQ(a.gap_sdp->min, 0.0);
  EXPECT_NEAR(a.gap_sdp->avg, 0.01, 1e-15);
  EXPECT_DOUBLE_EQ(a.gap_sdp->max, 0.02);
  EXPECT_DOUBLE_EQ(*a.sdp_time_avg, 2.0);
  EXPECT_FALSE(agg[2].sdp_time_avg);
  for (const auto& g : agg) {
    if (g.gap_sdp) {
      EXPECT_LE(g.gap_sdp->min, g.gap_sdp->avg);
      EXPECT_LE(g.gap_sdp->avg, g.gap_sdp->max);
    }
  }
}

TEST(Bench, CsvRoundTripsToPrintedPrecision) {
  BenchRow r;
  r.instance_name = "a,\"b\"";
  r.n = 30;
  r.aleph = 5;
  r.ub = 1.234567891;
  r.gap_exact = 0.000123456789;
  r.lb_sdp = 1.2345;
  r.gap_sdp = std::nullopt;
  r.sdp_time = 12.5;
  r.rank = 2;
  r.status = "sdp=MaxIter;exact=TimeLimit";
  const std::string text = csv_of({r});
  EXPECT_EQ(text.find('\r'), std::string::npos);
  EXPECT_EQ(text.substr(0, text.find('\n')), kBenchHeader);
  std::istringstream in(text);
  const auto back = parse_bench_csv(in);
  ASSERT_EQ(back.size(), 1u);
  const BenchRow& b = back[0];
  EXPECT_EQ(b.instance_name, r.instance_name);
  EXPECT_EQ(b.n, 30);
  EXPECT_EQ(b.aleph, 5);
  EXPECT_NEAR(*b.ub, *r.ub, 5e-6 * *r.ub);
  EXPECT_NEAR(*b.gap_exact, *r.gap_exact, 5e-6 * *r.gap_exact);
  EXPECT_EQ(*b.lb_sdp, 1.2345);
  EXPECT_FALSE(b.gap_sdp);
  EXPECT_EQ(*b.sdp_time, 12.5);
  EXPECT_EQ(b.rank, 2);
  EXPECT_EQ(b.status, r.status);
  EXPECT_EQ(csv_of(back), text);
}

TEST(Bench, AggregateCsvLayout) {
  std::ostringstream out;
  write_aggregate_csv(aggregate({row(2, 10, 0.1, 0.0, 1.0), row(2, 10, 0.3, 0.02, 2.0)}), out);
  EXPECT_EQ(out.str(), std::string(kAggregateHeader) + "\n2,10,0.1,0.2,0.3,0,0.01,0.02,1.5,2\n");
}

TEST(Bench, DeterministicAcrossRunsAndJobs) {
  TempDir dir("determinism");
  write_suite(dir.path(), 4, 8);
  BenchOptions opt;
  opt.alephs = {2, 3};
  opt.timing = false;
  const std::string first = csv_of(run_bench(dir.path(), opt));
  EXPECT_EQ(csv_of(run_bench(dir.path(), opt)), first);
  opt.jobs = 3;
  EXPECT_EQ(csv_of(run_bench(dir.path(), opt)), first);
}

TEST(Bench, FailuresAreRecordedAndHarnessContinues) {
  TempDir dir("failure");
  write_suite(dir.path(), 2, 6);
  std::ofstream(dir.path() / "broken.json") << "{\"n\": 2";
  BenchOptions opt;
  const auto rows = run_bench(dir.path(), opt);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].instance_name, "broken");
  EXPECT_EQ(rows[0].status.rfind("error=", 0), 0u);
  EXPECT_EQ(rows[1].status, "ok");
  EXPECT_EQ(rows[2].status, "ok");
}

TEST(Bench, AggregatePath) {
  EXPECT_EQ(aggregate_path("out/results.csv"), std::filesystem::path("out/results_aggregate.csv"));
}

TEST(Bench, MissingDirectory) {
  EXPECT_THROW(run_bench("/nonexistent/dir", BenchOptions{}), ParseError);
}
