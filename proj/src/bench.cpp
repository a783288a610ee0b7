#include "lanehash/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <iomanip>
#include <latch>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include "lanehash/resize.hpp"

namespace lanehash {

std::uint64_t SplitMix64::below(std::uint64_t bound) noexcept {
  // Lemire's nearly divisionless method on the top 64 bits of a 128-bit product.
  unsigned __int128 prod = static_cast<unsigned __int128>(next()) * bound;
  auto low = static_cast<std::uint64_t>(prod);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      prod = static_cast<unsigned __int128>(next()) * bound;
      low = static_cast<std::uint64_t>(prod);
    }
  }
  return static_cast<std::uint64_t>(prod >> 64);
}

std::vector<Key> gen_keys(std::size_t n, std::uint64_t seed, std::uint64_t key_space) {
  if (key_space == 0 || key_space > kFullKeySpace) {
    throw std::invalid_argument("key_space must lie in [1, 2^32 - 1]");
  }
  if (n > key_space) {
    throw std::invalid_argument("cannot draw " + std::to_string(n) +
                                " distinct keys from a space of " +
                                std::to_string(key_space));
  }
  SplitMix64 rng(seed);
  std::vector<Key> keys;
  keys.reserve(n);
  if (n > key_space / 2) {
    // Dense draw: partial Fisher-Yates over the whole space.
    std::vector<Key> space(key_space);
    std::iota(space.begin(), space.end(), Key{0});
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint64_t j = i + rng.below(key_space - i);
      std::swap(space[i], space[j]);
      keys.push_back(space[i]);
    }
    return keys;
  }
  std::unordered_set<Key> seen;
  seen.reserve(n * 2);
  while (keys.size() < n) {
    const auto k = static_cast<Key>(rng.below(key_space));
    if (seen.insert(k).second) keys.push_back(k);
  }
  return keys;
}

const char* to_string(WorkloadKind k) noexcept {
  switch (k) {
    case WorkloadKind::BulkInsert:
      return "bulk-insert";
    case WorkloadKind::BulkLookup:
      return "bulk-lookup";
    case WorkloadKind::Mixed:
      return "mixed";
    case WorkloadKind::ResizeStress:
      return "resize-stress";
  }
  return "unknown";
}

void WorkloadSpec::validate() const {
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (reps < 1) throw std::invalid_argument("reps must be >= 1");
  if (kind == WorkloadKind::Mixed) {
    const double sum = ratio.insert + ratio.lookup + ratio.erase;
    if (ratio.insert < 0 || ratio.lookup < 0 || ratio.erase < 0 ||
        std::abs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("mix ratios must be non-negative and sum to 1");
    }
  }
  if (target_load < 0.0 || target_load > 1.0) {
    throw std::invalid_argument("target_load must lie in [0, 1]");
  }
  const std::uint64_t space = effective_key_space();
  if (space == 0 || space > kFullKeySpace) {
    throw std::invalid_argument("key_space must lie in [1, 2^32 - 1]");
  }
  if (kind == WorkloadKind::Mixed) {
    if (space < workers) throw std::invalid_argument("key_space smaller than worker count");
  } else if (effective_ops() > space) {
    throw std::invalid_argument("key_space is smaller than the number of distinct keys");
  }
  // Table construction validates the bucket count and the table config.
  Table probe(initial_buckets, table);
}

std::size_t WorkloadSpec::effective_ops() const {
  if (kind == WorkloadKind::BulkInsert && target_load > 0.0) {
    const double slots = static_cast<double>(initial_buckets) * kSlotsPerBucket;
    return static_cast<std::size_t>(std::ceil(target_load * slots));
  }
  return n_ops;
}

std::uint64_t WorkloadSpec::effective_key_space() const {
  if (key_space != 0) return key_space;
  return kind == WorkloadKind::Mixed ? std::max<std::uint64_t>(n_ops, workers)
                                     : kFullKeySpace;
}

AuditResult audit_table(const Table& t, const std::unordered_map<Key, Value>& model,
                        std::uint64_t inserts_ok, std::uint64_t deletes_ok) {
  AuditResult a;
  std::ostringstream why;
  a.consistent = t.check_consistency();
  if (!a.consistent) why << "free mask / slot mismatch; ";

  const std::vector<PackedEntry> stored = t.entries();
  std::unordered_map<Key, Value> contents;
  contents.reserve(stored.size());
  bool duplicates = false;
  for (const PackedEntry e : stored) {
    duplicates |= !contents.emplace(unpack_key(e), unpack_value(e)).second;
  }
  a.exact_contents = !duplicates && contents == model;
  if (duplicates) why << "duplicate keys stored; ";
  if (!duplicates && contents != model) {
    why << "contents differ from model (" << contents.size() << " stored vs "
        << model.size() << " expected); ";
  }

  a.conservation = inserts_ok >= deletes_ok && inserts_ok - deletes_ok == stored.size();
  if (!a.conservation) {
    why << "conservation: " << inserts_ok << " - " << deletes_ok << " != " << stored.size()
        << "; ";
  }

  std::size_t missing = 0;
  for (const auto& [k, v] : model) {
    const auto got = lookup(t, k);
    if (!got || *got != v) ++missing;
  }
  a.findable = missing == 0;
  if (!a.findable) why << missing << " keys not findable; ";
  a.detail = why.str();
  return a;
}

namespace {

using Clock = std::chrono::steady_clock;

// Stop-the-world rendezvous for resize phases. Workers poll between
// operations; the worker that observes a threshold crossing waits for every
// other active worker to park, resizes, then releases them.
class ResizeGate {
 public:
  ResizeGate(Table& t, unsigned workers, bool enabled)
      : table_(t), active_(workers), enabled_(enabled) {}

  void checkpoint() {
    if (pause_.load(std::memory_order_acquire)) {
      std::unique_lock lk(mu_);
      park(lk);
    }
  }

  void after_mutation() {
    if (!enabled_ || !due()) return;
    std::unique_lock lk(mu_);
    if (pausing_) {
      park(lk);
      return;
    }
    if (!due()) return;
    pausing_ = true;
    pause_.store(true, std::memory_order_release);
    cv_.wait(lk, [&] { return parked_ + 1 == active_; });

    const RebalanceResult r = rebalance(table_);
    events_ += r.events();
    if (r.expand_batches > 0) shrink_blocked_.store(false, std::memory_order_relaxed);
    if (r.contraction_stalled) {
      blocked_at_.store(table_.occupied_slots(), std::memory_order_relaxed);
      shrink_blocked_.store(true, std::memory_order_relaxed);
    }

    pausing_ = false;
    pause_.store(false, std::memory_order_release);
    cv_.notify_all();
  }

  void enroll(unsigned workers) {
    std::lock_guard lk(mu_);
    active_ = workers;
  }

  void leave() {
    std::lock_guard lk(mu_);
    --active_;
    cv_.notify_all();
  }

  std::size_t events() const { return events_; }

 private:
  void park(std::unique_lock<std::mutex>& lk) {
    if (!pausing_) return;
    ++parked_;
    cv_.notify_all();
    cv_.wait(lk, [&] { return !pausing_; });
    --parked_;
  }

  bool due() {
    const double lf = table_.load_factor();
    const TableConfig& cfg = table_.config();
    if (lf > cfg.grow_threshold || stash_pressure(table_)) return true;
    if (lf >= cfg.shrink_threshold || table_.bucket_count() <= table_.min_buckets()) {
      return false;
    }
    if (shrink_blocked_.load(std::memory_order_relaxed)) {
      // Retry a stalled contraction once occupancy has moved noticeably.
      const std::size_t at = blocked_at_.load(std::memory_order_relaxed);
      const std::size_t now = table_.occupied_slots();
      const std::size_t moved = at > now ? at - now : now - at;
      if (moved < table_.slot_count() / 16) return false;
      shrink_blocked_.store(false, std::memory_order_relaxed);
    }
    return true;
  }

  Table& table_;
  std::mutex mu_;
  std::condition_variable cv_;
  unsigned active_;
  unsigned parked_ = 0;
  bool pausing_ = false;
  bool enabled_;
  std::atomic<bool> pause_{false};
  std::atomic<bool> shrink_blocked_{false};
  std::atomic<std::size_t> blocked_at_{0};
  std::size_t events_ = 0;
};

struct WorkerState {
  StepCounters counters;
  std::unordered_map<Key, Value> model;
  std::vector<PackedEntry> homeless;  // displaced words a full stash refused
  std::uint64_t inserts_ok = 0;
  std::uint64_t deletes_ok = 0;
  std::uint64_t lookups = 0;
  std::uint64_t lookup_hits = 0;
  std::uint64_t ops = 0;
  std::uint64_t insert_calls = 0;
};

Value value_for(Key k, std::uint64_t seed) noexcept {
  return static_cast<Value>(SplitMix64(seed ^ (std::uint64_t{k} << 1)).next());
}

class Runner {
 public:
  Runner(const WorkloadSpec& spec, Table& t)
      : spec_(spec), table_(t), gate_(t, spec.workers, spec.resize_enabled),
        states_(spec.workers) {}

  void do_insert(WorkerState& w, Key k, Value v) {
    InsertOptions opts;
    opts.timed = spec_.timing_sample != 0 && (w.insert_calls++ % spec_.timing_sample) == 0;
    const InsertOutcome o = insert(table_, k, v, opts);
    w.counters.record(o);
    ++w.ops;
    switch (o.kind) {
      case InsertKind::ReplacedExisting:
        w.model[k] = v;
        break;
      case InsertKind::FailedPending:
        if (unpack_key(o.pending) != k) {
          // The new pair is stored; a displaced resident is homeless.
          w.model[k] = v;
          ++w.inserts_ok;
          w.homeless.push_back(o.pending);
        }
        break;
      default:
        w.model[k] = v;
        ++w.inserts_ok;
        break;
    }
    gate_.after_mutation();
  }

  void do_erase(WorkerState& w, Key k) {
    ++w.ops;
    if (erase(table_, k)) {
      w.model.erase(k);
      ++w.deletes_ok;
    }
    gate_.after_mutation();
  }

  void do_lookup(WorkerState& w, Key k) {
    ++w.ops;
    ++w.lookups;
    if (lookup(table_, k)) ++w.lookup_hits;
  }

  // Runs body(worker_index, state) on every worker; returns the wall time.
  template <class Body>
  std::chrono::nanoseconds parallel(Body&& body) {
    gate_.enroll(spec_.workers);
    if (spec_.workers == 1) {
      const auto t0 = Clock::now();
      body(0u, states_[0]);
      return Clock::now() - t0;
    }
    std::latch start(spec_.workers + 1);
    std::vector<std::thread> threads;
    threads.reserve(spec_.workers);
    for (unsigned w = 0; w < spec_.workers; ++w) {
      threads.emplace_back([&, w] {
        start.arrive_and_wait();
        body(w, states_[w]);
        gate_.leave();
      });
    }
    const auto t0 = Clock::now();
    start.arrive_and_wait();
    for (auto& th : threads) th.join();
    return Clock::now() - t0;
  }

  // Contiguous slice of [0, n) owned by worker w.
  std::pair<std::size_t, std::size_t> slice(std::size_t n, unsigned w) const {
    const std::size_t lo = n * w / spec_.workers;
    const std::size_t hi = n * (w + 1) / spec_.workers;
    return {lo, hi};
  }

  RunReport run() {
    const std::size_t n_ops = spec_.effective_ops();
    const std::uint64_t space = spec_.effective_key_space();
    std::chrono::nanoseconds wall{0};

    switch (spec_.kind) {
      case WorkloadKind::BulkInsert: {
        const auto keys = gen_keys(n_ops, spec_.seed, space);
        wall = parallel([&](unsigned w, WorkerState& st) {
          const auto [lo, hi] = slice(keys.size(), w);
          for (std::size_t i = lo; i < hi; ++i) {
            gate_.checkpoint();
            do_insert(st, keys[i], value_for(keys[i], spec_.seed));
          }
        });
        break;
      }
      case WorkloadKind::BulkLookup: {
        const auto keys = gen_keys(n_ops, spec_.seed, space);
        parallel([&](unsigned w, WorkerState& st) {
          const auto [lo, hi] = slice(keys.size(), w);
          for (std::size_t i = lo; i < hi; ++i) {
            gate_.checkpoint();
            do_insert(st, keys[i], value_for(keys[i], spec_.seed));
          }
        });
        for (WorkerState& st : states_) st.ops = 0;  // only lookups are timed
        wall = parallel([&](unsigned w, WorkerState& st) {
          const auto [lo, hi] = slice(keys.size(), w);
          for (std::size_t i = lo; i < hi; ++i) do_lookup(st, keys[i]);
        });
        break;
      }
      case WorkloadKind::Mixed: {
        const auto insert_cut = static_cast<std::uint64_t>(spec_.ratio.insert * 1e6);
        const auto lookup_cut =
            static_cast<std::uint64_t>((spec_.ratio.insert + spec_.ratio.lookup) * 1e6);
        wall = parallel([&](unsigned w, WorkerState& st) {
          const auto [op_lo, op_hi] = slice(n_ops, w);
          const std::uint64_t key_lo = space * w / spec_.workers;
          const std::uint64_t key_hi = space * (w + 1) / spec_.workers;
          SplitMix64 rng(spec_.seed ^ (0xA0761D6478BD642Full * (w + 1)));
          for (std::size_t i = op_lo; i < op_hi; ++i) {
            gate_.checkpoint();
            const std::uint64_t dice = rng.below(1000000);
            const auto k = static_cast<Key>(key_lo + rng.below(key_hi - key_lo));
            if (dice < insert_cut) {
              do_insert(st, k, static_cast<Value>(rng.next()));
            } else if (dice < lookup_cut) {
              do_lookup(st, k);
            } else {
              do_erase(st, k);
            }
          }
        });
        break;
      }
      case WorkloadKind::ResizeStress: {
        // Grow through several rounds, then drain most of it back out.
        const auto keys = gen_keys(n_ops, spec_.seed, space);
        wall = parallel([&](unsigned w, WorkerState& st) {
          const auto [lo, hi] = slice(keys.size(), w);
          for (std::size_t i = lo; i < hi; ++i) {
            gate_.checkpoint();
            do_insert(st, keys[i], value_for(keys[i], spec_.seed));
          }
          const std::size_t keep = (hi - lo) / 10;
          for (std::size_t i = lo; i + keep < hi; ++i) {
            gate_.checkpoint();
            do_erase(st, keys[i]);
          }
        });
        break;
      }
    }
    return finish(wall);
  }

 private:
  RunReport finish(std::chrono::nanoseconds wall) {
    RunReport r;
    std::unordered_map<Key, Value> model;
    std::vector<PackedEntry> homeless;
    for (const WorkerState& st : states_) {
      r.counters += st.counters;
      r.inserts_ok += st.inserts_ok;
      r.deletes_ok += st.deletes_ok;
      r.lookups += st.lookups;
      r.lookup_hits += st.lookup_hits;
      r.ops_executed += st.ops;
      model.insert(st.model.begin(), st.model.end());
      homeless.insert(homeless.end(), st.homeless.begin(), st.homeless.end());
    }
    // Quiescent now. Residents that a full stash refused go back in after an
    // expansion makes room.
    for (PackedEntry e : homeless) {
      for (;;) {
        const InsertOutcome o = insert(table_, unpack_key(e), unpack_value(e));
        if (o.kind != InsertKind::FailedPending) break;
        e = o.pending;
        expand_batch(table_, table_.config().batch_k);
        ++extra_events_;
      }
    }

    r.wall_time = wall;
    const double secs = std::chrono::duration<double>(wall).count();
    r.ops_per_second = secs > 0 ? static_cast<double>(r.ops_executed) / secs : 0.0;
    r.final_load_factor = table_.load_factor();
    r.final_buckets = table_.bucket_count();
    r.stash_peak = table_.stash_peak();
    r.stash_capacity = table_.stash_capacity();
    r.slot_capacity = spec_.initial_buckets * kSlotsPerBucket;
    r.resize_events = gate_.events() + extra_events_;
    r.count_entries = table_.count_entries();
    r.reps = 1;
    r.audit = audit_table(table_, model, r.inserts_ok, r.deletes_ok);
    return r;
  }

  const WorkloadSpec& spec_;
  Table& table_;
  ResizeGate gate_;
  std::vector<WorkerState> states_;
  std::size_t extra_events_ = 0;
};

}  // namespace

RunReport run_once(const WorkloadSpec& spec) {
  spec.validate();
  Table t(spec.initial_buckets, spec.table);
  Runner runner(spec, t);
  return runner.run();
}

RunReport run_workload(const WorkloadSpec& spec) {
  spec.validate();
  if (spec.reps > 1) run_once(spec);  // warm-up, discarded
  RunReport last;
  double ops_sum = 0.0;
  bool all_ok = true;
  for (unsigned i = 0; i < spec.reps; ++i) {
    last = run_once(spec);
    ops_sum += last.ops_per_second;
    all_ok = all_ok && last.audit.ok();
  }
  if (!all_ok && last.audit.ok()) {
    last.audit.consistent = false;
    last.audit.detail = "an earlier repetition failed its audit";
  }
  last.ops_per_second = ops_sum / spec.reps;
  last.reps = spec.reps;
  return last;
}

std::vector<CsrRow> csr_sweep(std::span<const HashFn> fns, std::uint64_t m,
                              std::span<const std::uint64_t> n_values,
                              std::uint64_t seed) {
  std::vector<CsrRow> rows;
  for (const std::uint64_t n : n_values) {
    const std::vector<Key> keys = gen_keys(n, seed);
    const ModelStats model = uniform_model(n, m);
    for (const HashFn fn : fns) {
      const std::uint64_t observed = observed_collisions(keys, fn, m);
      rows.push_back({fn, n, m, model.expected_collisions, observed,
                      csr(model.expected_collisions, observed),
                      model.expected_collisions < 1.0});
    }
  }
  return rows;
}

StepBreakdown step_breakdown_report(const StepCounters& c, std::uint64_t total_inserts) {
  if (total_inserts == 0) throw std::invalid_argument("total_inserts must be > 0");
  StepBreakdown b;
  b.total_inserts = total_inserts;
  const double successful = static_cast<double>(c.successful());
  const std::array<std::uint64_t, 4> hits{c.step1_hits, c.step2_hits, c.step3_hits,
                                          c.step4_hits};
  for (int i = 0; i < 4; ++i) {
    b.count_pct[i] = successful > 0 ? 100.0 * static_cast<double>(hits[i]) / successful : 0.0;
  }
  const double total_time = static_cast<double>(
      std::accumulate(c.step_time.begin(), c.step_time.end(), std::chrono::nanoseconds{0})
          .count());
  for (int i = 0; i < 4; ++i) {
    b.time_pct[i] =
        total_time > 0 ? 100.0 * static_cast<double>(c.step_time[i].count()) / total_time : 0.0;
  }
  const double total = static_cast<double>(total_inserts);
  b.step3_entry_rate = static_cast<double>(c.step3_entries) / total;
  b.lock_rate = static_cast<double>(c.lock_acquisitions) / total;
  b.failed_pct = 100.0 * static_cast<double>(c.failed_pending) / total;
  return b;
}

void write_run_csv_header(std::ostream& os) {
  os << "mode,ops,workers,seed,ops_per_sec,load_factor,stash_peak,resizes,"
        "step1,step2,step3,step4,lock_acq\n";
}

void write_run_csv_row(std::ostream& os, std::string_view mode, const WorkloadSpec& spec,
                       const RunReport& r, bool include_timing) {
  std::ostringstream row;
  row << mode << ',' << r.ops_executed << ',' << spec.workers << ',' << spec.seed << ',';
  if (include_timing) row << std::fixed << std::setprecision(1) << r.ops_per_second;
  row << ',' << std::fixed << std::setprecision(6) << r.final_load_factor << ','
      << r.stash_peak << ',' << r.resize_events << ',' << r.counters.step1_hits << ','
      << r.counters.step2_hits << ',' << r.counters.step3_hits << ','
      << r.counters.step4_hits << ',' << r.counters.lock_acquisitions << '\n';
  os << row.str();
}

void write_csr_csv(std::ostream& os, std::span<const CsrRow> rows) {
  std::ostringstream out;
  out << "fn,n,m,expected_Y,observed_Y,csr\n";
  for (const CsrRow& row : rows) {
    out << to_string(row.fn) << ',' << row.n << ',' << row.m << ',' << std::fixed
        << std::setprecision(4) << row.expected_y << ',' << row.observed_y << ',';
    if (std::isinf(row.csr)) {
      out << "inf";
    } else {
      out << std::setprecision(6) << row.csr;
    }
    out << '\n';
  }
  os << out.str();
}

}  // namespace lanehash
