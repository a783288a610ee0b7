#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lanehash/bench.hpp"
#include "lanehash/hashing.hpp"
#include "lanehash/ops.hpp"
#include "lanehash/resize.hpp"
#include "lanehash/table.hpp"

namespace py = pybind11;
using namespace lanehash;

namespace {

void check_key(std::uint64_t k) {
  if (k >= kReservedKey) {
    throw py::value_error("key must lie in [0, 2^32 - 2], got " + std::to_string(k));
  }
}

// Single-threaded handle. Resizes run between operations when enabled, and a
// word the stash cannot take is placed after expanding.
class PyTable {
 public:
  PyTable(std::size_t buckets, std::uint32_t max_evictions, double stash_fraction,
          std::size_t batch_k, bool auto_resize)
      : auto_resize_(auto_resize) {
    TableConfig cfg;
    cfg.max_evictions = max_evictions;
    cfg.stash_fraction = stash_fraction;
    cfg.batch_k = batch_k;
    table_ = std::make_unique<Table>(buckets, cfg);
  }

  std::string insert(std::uint64_t k, std::uint32_t v) {
    check_key(k);
    InsertOutcome o = lanehash::insert(*table_, static_cast<Key>(k), v);
    const std::string kind = to_string(o.kind);
    while (o.kind == InsertKind::FailedPending) {
      if (!auto_resize_) {
        // Hand the displaced word back rather than lose it.
        const PackedEntry pending = o.pending;
        if (unpack_key(pending) != k) pending_.push_back(pending);
        break;
      }
      expand_batch(*table_, table_->config().batch_k);
      o = lanehash::insert(*table_, unpack_key(o.pending), unpack_value(o.pending));
    }
    settle();
    return kind;
  }

  std::optional<std::uint32_t> lookup(std::uint64_t k) const {
    check_key(k);
    return lanehash::lookup(*table_, static_cast<Key>(k));
  }

  bool erase(std::uint64_t k) {
    check_key(k);
    const bool ok = lanehash::erase(*table_, static_cast<Key>(k));
    settle();
    return ok;
  }

  py::list items() const {
    py::list out;
    for (const PackedEntry e : table_->entries()) {
      out.append(py::make_tuple(unpack_key(e), unpack_value(e)));
    }
    return out;
  }

  std::vector<std::pair<Key, Value>> pending() const {
    std::vector<std::pair<Key, Value>> out;
    for (const PackedEntry e : pending_) out.emplace_back(unpack_key(e), unpack_value(e));
    return out;
  }

  const Table& table() const { return *table_; }
  Table& table() { return *table_; }

 private:
  void settle() {
    if (auto_resize_) rebalance(*table_);
  }

  std::unique_ptr<Table> table_;
  bool auto_resize_;
  std::vector<PackedEntry> pending_;
};

py::dict model_dict(const ModelStats& s) {
  py::dict d;
  d["n"] = s.n;
  d["m"] = s.m;
  d["lambda"] = s.lambda;
  d["expected_collisions"] = s.expected_collisions;
  d["collision_probability"] = s.collision_probability;
  d["expected_empty"] = s.expected_empty;
  d["expected_collisions_poisson"] = s.expected_collisions_poisson;
  return d;
}

WorkloadKind parse_kind(const std::string& name) {
  if (name == "bulk-insert") return WorkloadKind::BulkInsert;
  if (name == "bulk-lookup") return WorkloadKind::BulkLookup;
  if (name == "mixed") return WorkloadKind::Mixed;
  if (name == "resize-stress") return WorkloadKind::ResizeStress;
  throw py::value_error("unknown workload kind: " + name);
}

py::dict report_dict(const RunReport& r) {
  py::dict counters;
  counters["step1"] = r.counters.step1_hits;
  counters["step2"] = r.counters.step2_hits;
  counters["step3"] = r.counters.step3_hits;
  counters["step3_entries"] = r.counters.step3_entries;
  counters["step4"] = r.counters.step4_hits;
  counters["failed_pending"] = r.counters.failed_pending;
  counters["lock_acquisitions"] = r.counters.lock_acquisitions;

  py::dict d;
  d["ops_per_second"] = r.ops_per_second;
  d["wall_time_s"] = std::chrono::duration<double>(r.wall_time).count();
  d["ops"] = r.ops_executed;
  d["load_factor"] = r.final_load_factor;
  d["buckets"] = r.final_buckets;
  d["stash_peak"] = r.stash_peak;
  d["stash_capacity"] = r.stash_capacity;
  d["resizes"] = r.resize_events;
  d["inserts_ok"] = r.inserts_ok;
  d["deletes_ok"] = r.deletes_ok;
  d["lookups"] = r.lookups;
  d["lookup_hits"] = r.lookup_hits;
  d["count_entries"] = r.count_entries;
  d["counters"] = counters;
  d["audit_ok"] = r.audit.ok();
  d["audit_detail"] = r.audit.detail;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Concurrent bucketized cuckoo hash table core";

  m.attr("EMPTY") = kEmpty;
  m.attr("RESERVED_KEY") = kReservedKey;

  m.def("pack", [](std::uint64_t k, std::uint32_t v) {
    check_key(k);
    return pack(static_cast<Key>(k), v);
  }, py::arg("key"), py::arg("value"));
  m.def("unpack", [](PackedEntry e) {
    if (is_empty(e)) throw py::value_error("cannot unpack the empty sentinel");
    return py::make_tuple(unpack_key(e), unpack_value(e));
  }, py::arg("entry"));
  m.def("is_empty", &is_empty, py::arg("entry"));

  py::enum_<HashFn>(m, "HashFn")
      .value("BitHash1", HashFn::BitHash1)
      .value("BitHash2", HashFn::BitHash2)
      .value("Crc32", HashFn::Crc32);

  m.def("hash", &hash, py::arg("fn"), py::arg("key"));
  m.def("bit_hash1", &bit_hash1, py::arg("key"));
  m.def("bit_hash2", &bit_hash2, py::arg("key"));
  m.def("crc32", &crc32_key, py::arg("key"));

  m.def("uniform_model", [](std::uint64_t n, std::uint64_t bins) {
    return model_dict(uniform_model(n, bins));
  }, py::arg("n"), py::arg("m"));
  m.def("observed_collisions", [](const std::vector<Key>& keys, HashFn fn, std::uint64_t bins) {
    return observed_collisions(keys, fn, bins);
  }, py::arg("keys"), py::arg("fn"), py::arg("m"));
  m.def("csr", &csr, py::arg("expected"), py::arg("observed"));
  m.def("gen_keys", &gen_keys, py::arg("n"), py::arg("seed"),
        py::arg("key_space") = kFullKeySpace);

  py::class_<PyTable>(m, "Table")
      .def(py::init<std::size_t, std::uint32_t, double, std::size_t, bool>(),
           py::arg("buckets") = 1024, py::arg("max_evictions") = 16,
           py::arg("stash_fraction") = 0.02, py::arg("batch_k") = 1024,
           py::arg("auto_resize") = true)
      .def("insert", &PyTable::insert, py::arg("key"), py::arg("value"),
           "Insert or replace. Returns the completing step: replaced, claimed, "
           "evicted, stashed or failed_pending.")
      .def("lookup", &PyTable::lookup, py::arg("key"))
      .def("erase", &PyTable::erase, py::arg("key"))
      .def("delete", &PyTable::erase, py::arg("key"))
      .def("items", &PyTable::items)
      .def("pending", &PyTable::pending,
           "Displaced pairs refused by a full stash (auto_resize=False only).")
      .def("__len__", [](const PyTable& t) { return t.table().count_entries(); })
      .def("__contains__", [](const PyTable& t, std::uint64_t k) {
        return k < kReservedKey && t.lookup(k).has_value();
      })
      .def_property_readonly("load_factor", [](const PyTable& t) { return t.table().load_factor(); })
      .def_property_readonly("bucket_count", [](const PyTable& t) { return t.table().bucket_count(); })
      .def_property_readonly("slot_count", [](const PyTable& t) { return t.table().slot_count(); })
      .def_property_readonly("stash_size", [](const PyTable& t) { return t.table().stash_size(); })
      .def_property_readonly("stash_capacity",
                             [](const PyTable& t) { return t.table().stash_capacity(); })
      .def_property_readonly("addressing", [](const PyTable& t) {
        const AddressingState a = t.table().addressing();
        return py::make_tuple(a.index_mask, a.split_ptr);
      })
      .def("check_consistency", [](const PyTable& t) { return t.table().check_consistency(); })
      .def("expand", [](PyTable& t, std::size_t k) { return expand_batch(t.table(), k); },
           py::arg("k"))
      .def("contract", [](PyTable& t, std::size_t k) { return contract_batch(t.table(), k); },
           py::arg("k"));

  m.def("run_workload",
        [](const std::string& kind, std::size_t ops, unsigned workers, std::uint64_t seed,
           std::size_t buckets, std::tuple<double, double, double> ratio, double target_load,
           unsigned reps, bool resize) {
          WorkloadSpec s;
          s.kind = parse_kind(kind);
          s.n_ops = ops;
          s.workers = workers;
          s.seed = seed;
          s.initial_buckets = buckets;
          s.ratio = {std::get<0>(ratio), std::get<1>(ratio), std::get<2>(ratio)};
          s.target_load = target_load;
          s.reps = reps;
          s.resize_enabled = resize && target_load == 0.0;
          RunReport r;
          {
            py::gil_scoped_release release;
            r = run_workload(s);
          }
          return report_dict(r);
        },
        py::arg("kind") = "mixed", py::arg("ops") = 1 << 16, py::arg("workers") = 1,
        py::arg("seed") = 1, py::arg("buckets") = 1024,
        py::arg("ratio") = std::make_tuple(0.5, 0.3, 0.2), py::arg("target_load") = 0.0,
        py::arg("reps") = 1, py::arg("resize") = true);

  m.def("csr_sweep",
        [](std::uint64_t bins, const std::vector<std::uint64_t>& n_values, std::uint64_t seed) {
          const std::vector<HashFn> fns{HashFn::BitHash1, HashFn::BitHash2, HashFn::Crc32};
          py::list out;
          for (const CsrRow& r : csr_sweep(fns, bins, n_values, seed)) {
            py::dict d;
            d["fn"] = std::string(to_string(r.fn));
            d["n"] = r.n;
            d["m"] = r.m;
            d["expected_Y"] = r.expected_y;
            d["observed_Y"] = r.observed_y;
            d["csr"] = r.csr;
            d["low_signal"] = r.low_signal;
            out.append(d);
          }
          return out;
        },
        py::arg("m"), py::arg("n_values"), py::arg("seed") = 1);
}
