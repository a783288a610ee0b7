#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "lanehash/bench.hpp"

using namespace lanehash;

TEST_CASE("SplitMix64 matches the reference sequence") {
  SplitMix64 rng(0);
  CHECK(rng.next() == 0xe220a8397b1dcdafull);
}

TEST_CASE("bounded draws stay in range") {
  SplitMix64 rng(4);
  for (int i = 0; i < 10000; ++i) REQUIRE(rng.below(7) < 7);
  CHECK(rng.below(1) == 0);
}

TEST_CASE("gen_keys is deterministic, distinct and in range") {
  const auto a = gen_keys(5000, 42, 100000);
  const auto b = gen_keys(5000, 42, 100000);
  CHECK(a == b);
  CHECK(std::set<Key>(a.begin(), a.end()).size() == a.size());
  for (const Key k : a) REQUIRE(k < 100000u);
  CHECK(gen_keys(5000, 43, 100000) != a);
}

TEST_CASE("gen_keys dense draws cover the space") {
  const auto keys = gen_keys(1000, 9, 1000);
  CHECK(std::set<Key>(keys.begin(), keys.end()).size() == 1000);
  CHECK_THROWS_AS(gen_keys(1001, 9, 1000), std::invalid_argument);
  CHECK_THROWS_AS(gen_keys(1, 9, 0), std::invalid_argument);
}

TEST_CASE("gen_keys never yields the reserved key") {
  const auto keys = gen_keys(100000, 1);
  for (const Key k : keys) REQUIRE(is_valid_key(k));
}

TEST_CASE("gen_keys is uniform by a chi-square test over 256 bins") {
  const auto keys = gen_keys(1 << 18, 77);
  std::vector<double> bins(256, 0.0);
  for (const Key k : keys) bins[k >> 24] += 1.0;
  const double expected = static_cast<double>(keys.size()) / 256.0;
  double chi2 = 0.0;
  for (const double o : bins) chi2 += (o - expected) * (o - expected) / expected;
  CHECK(chi2 < 310.45738821990585);  // 0.99 quantile, 255 degrees of freedom
}

TEST_CASE("workload spec validation") {
  WorkloadSpec s;
  s.ratio = {0.5, 0.5, 0.5};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = {};
  s.workers = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = {};
  s.initial_buckets = 100;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = {};
  s.kind = WorkloadKind::BulkInsert;
  s.initial_buckets = 64;
  s.target_load = 0.5;
  CHECK(s.effective_ops() == 1024);
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("every workload kind passes its audit") {
  for (const WorkloadKind kind : {WorkloadKind::BulkInsert, WorkloadKind::BulkLookup,
                                  WorkloadKind::Mixed, WorkloadKind::ResizeStress}) {
    for (const unsigned workers : {1u, 4u}) {
      WorkloadSpec s;
      s.kind = kind;
      s.n_ops = 30000;
      s.initial_buckets = 64;
      s.workers = workers;
      const RunReport r = run_workload(s);
      CAPTURE(to_string(kind));
      CAPTURE(workers);
      CHECK(r.audit.ok());
      CHECK(r.audit.detail.empty());
      CHECK(r.inserts_ok - r.deletes_ok == r.count_entries);
    }
  }
}

TEST_CASE("bulk lookups find every inserted key") {
  WorkloadSpec s;
  s.kind = WorkloadKind::BulkLookup;
  s.n_ops = 20000;
  s.initial_buckets = 128;
  const RunReport r = run_workload(s);
  CHECK(r.lookups == 20000);
  CHECK(r.lookup_hits == 20000);
  CHECK(r.ops_executed == 20000);
}

TEST_CASE("single-worker runs are reproducible") {
  WorkloadSpec s;
  s.kind = WorkloadKind::Mixed;
  s.n_ops = 50000;
  s.initial_buckets = 16;
  s.seed = 5;
  const RunReport a = run_workload(s);
  const RunReport b = run_workload(s);
  CHECK(a.counters.step1_hits == b.counters.step1_hits);
  CHECK(a.counters.step2_hits == b.counters.step2_hits);
  CHECK(a.counters.step3_hits == b.counters.step3_hits);
  CHECK(a.counters.step4_hits == b.counters.step4_hits);
  CHECK(a.counters.lock_acquisitions == b.counters.lock_acquisitions);
  CHECK(a.final_buckets == b.final_buckets);
  CHECK(a.resize_events == b.resize_events);
  CHECK(a.count_entries == b.count_entries);

  std::ostringstream ca, cb;
  write_run_csv_row(ca, "mixed", s, a, false);
  write_run_csv_row(cb, "mixed", s, b, false);
  CHECK(ca.str() == cb.str());
}

TEST_CASE("the fixed-capacity fill reaches its target load") {
  WorkloadSpec s;
  s.kind = WorkloadKind::BulkInsert;
  s.initial_buckets = 256;
  s.target_load = 0.75;
  s.resize_enabled = false;
  const RunReport r = run_workload(s);
  CHECK(r.ops_executed == 6144);
  CHECK(r.final_buckets == 256);
  CHECK(r.resize_events == 0);
  CHECK(r.counters.failed_pending == 0);
  CHECK(r.final_load_factor == doctest::Approx(0.75).epsilon(0.01));
}

TEST_CASE("step breakdown shares") {
  StepCounters c;
  c.step1_hits = 10;
  c.step2_hits = 80;
  c.step3_hits = 8;
  c.step4_hits = 2;
  c.step3_entries = 10;
  c.lock_acquisitions = 12;
  c.step_time = {std::chrono::nanoseconds(30), std::chrono::nanoseconds(60),
                 std::chrono::nanoseconds(10), std::chrono::nanoseconds(0)};
  const StepBreakdown b = step_breakdown_report(c, 100);
  CHECK(b.count_pct[1] == doctest::Approx(80.0));
  CHECK(b.count_pct[0] + b.count_pct[1] + b.count_pct[2] + b.count_pct[3] ==
        doctest::Approx(100.0));
  CHECK(b.time_pct[0] + b.time_pct[1] + b.time_pct[2] + b.time_pct[3] ==
        doctest::Approx(100.0));
  CHECK(b.step3_entry_rate == doctest::Approx(0.10));
  CHECK(b.lock_rate == doctest::Approx(0.12));
  CHECK_THROWS_AS(step_breakdown_report(c, 0), std::invalid_argument);
}

TEST_CASE("run CSV schema") {
  std::ostringstream os;
  write_run_csv_header(os);
  CHECK(os.str() ==
        "mode,ops,workers,seed,ops_per_sec,load_factor,stash_peak,resizes,"
        "step1,step2,step3,step4,lock_acq\n");
  WorkloadSpec s;
  s.workers = 2;
  s.seed = 9;
  RunReport r;
  r.ops_executed = 100;
  r.ops_per_second = 1234.56;
  r.final_load_factor = 0.5;
  r.counters.step2_hits = 7;
  std::ostringstream row;
  write_run_csv_row(row, "mixed", s, r, true);
  CHECK(row.str() == "mixed,100,2,9,1234.6,0.500000,0,0,0,7,0,0,0\n");
  std::ostringstream untimed;
  write_run_csv_row(untimed, "mixed", s, r, false);
  CHECK(untimed.str() == "mixed,100,2,9,,0.500000,0,0,0,7,0,0,0\n");
}

TEST_CASE("CSR sweep rows and CSV") {
  const std::vector<HashFn> fns{HashFn::Crc32, HashFn::BitHash1};
  const std::vector<std::uint64_t> ns{16, 4096};
  const auto rows = csr_sweep(fns, 1 << 16, ns, 3);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].n == 16);
  CHECK(rows[0].low_signal);
  CHECK_FALSE(rows[3].low_signal);
  for (const CsrRow& r : rows) {
    CHECK(r.expected_y == doctest::Approx(uniform_model(r.n, r.m).expected_collisions));
    CHECK(r.csr == csr(r.expected_y, r.observed_y));
  }
  std::ostringstream os;
  write_csr_csv(os, rows);
  CHECK(os.str().rfind("fn,n,m,expected_Y,observed_Y,csr\ncrc32,16,65536,", 0) == 0);

  const std::vector<CsrRow> inf_row{{HashFn::BitHash2, 2, 1024, 0.001, 0, csr(0.001, 0), true}};
  std::ostringstream is;
  write_csr_csv(is, inf_row);
  CHECK(is.str() == "fn,n,m,expected_Y,observed_Y,csr\nbithash2,2,1024,0.0010,0,inf\n");
}

TEST_CASE("audit flags tampered contents") {
  Table t(4);
  insert(t, 1, 1);
  insert(t, 2, 2);
  std::unordered_map<Key, Value> model{{1, 1}, {2, 2}};
  CHECK(audit_table(t, model, 2, 0).ok());
  model[3] = 3;
  const AuditResult bad = audit_table(t, model, 3, 0);
  CHECK_FALSE(bad.ok());
  CHECK_FALSE(bad.exact_contents);
  CHECK_FALSE(bad.findable);
  CHECK_FALSE(bad.conservation);
  CHECK_FALSE(bad.detail.empty());
}
