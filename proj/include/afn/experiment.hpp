#pragma once

// Experiment harness: run a grid of (ell, m) cells over a dataset, with
// several index seeds per cell and several queries per seed, recording the
// achieved approximation factor c_hat = true distance / returned distance per
// query, plus nearest-rank quartile summaries per cell.
//
// Determinism: the RNG for a cell derives from the master seed and the
// cell's own coordinates (ell, m), never from its position in the grid, so
// any subset of cells can run in any order (or in parallel) and produce
// identical records. Wall times are the only nondeterministic column;
// omit_times zeroes them so reruns are byte-identical.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "afn/annulus.hpp"
#include "afn/oracles.hpp"
#include "afn/projection_index.hpp"
#include "afn/query_independent.hpp"
#include "afn/serialize_util.hpp"
#include "afn/vector.hpp"

namespace afn {

enum class Variant { qd, qi_extremes, qi_maxproj, qi_depth };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::qd: return "qd";
    case Variant::qi_extremes: return "qi-extremes";
    case Variant::qi_maxproj: return "qi-maxproj";
    case Variant::qi_depth: return "qi-depth";
  }
  return "?";
}

struct ExperimentConfig {
  std::string dataset_id;
  const VectorDataset* data = nullptr;
  Variant variant = Variant::qd;
  std::vector<std::pair<std::size_t, std::size_t>> cells;  // (ell, m)
  std::size_t seeds = 1;             // index builds per cell
  std::size_t queries_per_seed = 1;  // queries per build, drawn from the dataset
  std::uint64_t master_seed = 42;
  bool omit_times = false;
};

struct ExperimentRecord {
  std::string dataset_id;
  Variant variant = Variant::qd;
  std::size_t ell = 0;
  std::size_t m = 0;
  std::uint64_t seed = 0;  // derived build seed; rebuilding from it reproduces the index
  std::uint32_t query_id = 0;
  std::uint32_t returned_id = 0;
  double returned_distance = 0.0;
  double true_distance = 0.0;
  double c_hat = 1.0;  // true/returned, >= 1; inf if the returned distance is 0
  std::size_t candidates = 0;
  std::int64_t query_time_us = 0;
};

struct SummaryRow {
  Variant variant = Variant::qd;
  std::size_t ell = 0;
  std::size_t m = 0;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0, mean = 0.0;
  std::size_t count = 0;
};

namespace detail {

// Nearest-rank quantile on an ascending-sorted sample: the smallest value
// whose rank is at least p * k.
inline double nearest_rank(const std::vector<double>& sorted, double p) {
  std::size_t k = sorted.size();
  std::size_t rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(k)));
  if (rank == 0) rank = 1;
  if (rank > k) rank = k;
  return sorted[rank - 1];
}

}  // namespace detail

inline SummaryRow summarize_cell(Variant variant, std::size_t ell, std::size_t m,
                                 std::vector<double> c_hats) {
  if (c_hats.empty()) throw std::invalid_argument("summarize_cell: empty sample");
  std::sort(c_hats.begin(), c_hats.end());
  SummaryRow row;
  row.variant = variant;
  row.ell = ell;
  row.m = m;
  row.min = c_hats.front();
  row.q1 = detail::nearest_rank(c_hats, 0.25);
  row.median = detail::nearest_rank(c_hats, 0.50);
  row.q3 = detail::nearest_rank(c_hats, 0.75);
  row.max = c_hats.back();
  double sum = 0.0;
  for (double v : c_hats) sum += v;
  row.mean = sum / static_cast<double>(c_hats.size());
  row.count = c_hats.size();
  return row;
}

struct ExperimentOutput {
  std::vector<ExperimentRecord> records;
  std::vector<SummaryRow> summary;
};

inline ExperimentOutput run_experiment(const ExperimentConfig& config) {
  if (config.data == nullptr) throw std::invalid_argument("run_experiment: no dataset");
  if (config.cells.empty()) throw std::invalid_argument("run_experiment: empty grid");
  if (config.seeds == 0 || config.queries_per_seed == 0) {
    throw std::invalid_argument("run_experiment: seeds and queries_per_seed must be >= 1");
  }
  const VectorDataset& data = *config.data;
  ExperimentOutput out;
  // True furthest distances depend only on the query id; cache across cells.
  std::unordered_map<std::uint32_t, double> true_dist;

  for (std::size_t ci = 0; ci < config.cells.size(); ++ci) {
    const auto [ell, m] = config.cells[ci];
    // Seed from the cell's own coordinates so a cell's records do not depend
    // on which other cells share the grid.
    std::uint64_t cell_seed =
        derive_stream(derive_stream(derive_stream(config.master_seed, 0xCE11), ell), m);
    std::vector<double> c_hats;
    c_hats.reserve(config.seeds * config.queries_per_seed);

    for (std::size_t s = 0; s < config.seeds; ++s) {
      std::uint64_t build_seed = derive_stream(cell_seed, 2 * s);
      Rng query_rng(derive_stream(cell_seed, 2 * s + 1));

      std::optional<ProjectionIndex> qd_index;
      std::optional<QueryIndependentOrder> qi_order;
      switch (config.variant) {
        case Variant::qd:
          qd_index = ProjectionIndex::build(data, AfnParams{2.0, ell, m}, build_seed);
          break;
        case Variant::qi_extremes:
          qi_order = build_extremes(data, ell, build_seed);
          break;
        case Variant::qi_maxproj:
          qi_order = build_max_projection(data, ell, build_seed);
          break;
        case Variant::qi_depth:
          qi_order = build_min_depth(data, ell, build_seed);
          break;
      }

      for (std::size_t qn = 0; qn < config.queries_per_seed; ++qn) {
        auto query_id = static_cast<std::uint32_t>(query_rng.uniform_index(data.size()));
        const Vector& q = data[query_id];

        auto started = std::chrono::steady_clock::now();
        QueryResult res = qd_index ? qd_index->query(q) : query_prefix(*qi_order, q, m);
        auto elapsed = std::chrono::steady_clock::now() - started;

        auto it = true_dist.find(query_id);
        if (it == true_dist.end()) {
          it = true_dist.emplace(query_id, brute_furthest(data, q).distance).first;
        }

        ExperimentRecord rec;
        rec.dataset_id = config.dataset_id;
        rec.variant = config.variant;
        rec.ell = ell;
        rec.m = m;
        rec.seed = build_seed;
        rec.query_id = query_id;
        rec.returned_id = res.point_id;
        rec.returned_distance = res.distance;
        rec.true_distance = it->second;
        rec.c_hat = res.distance > 0.0 ? it->second / res.distance
                                       : std::numeric_limits<double>::infinity();
        rec.candidates = res.candidates_examined;
        rec.query_time_us =
            config.omit_times
                ? 0
                : std::chrono::duration_cast<std::chrono::microseconds>(elapsed).count();
        out.records.push_back(std::move(rec));
        c_hats.push_back(out.records.back().c_hat);
      }
    }
    out.summary.push_back(summarize_cell(config.variant, ell, m, std::move(c_hats)));
  }
  return out;
}

inline void write_records_csv(const std::vector<ExperimentRecord>& records,
                              const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "dataset,variant,ell,m,seed,query_id,returned_id,returned_distance,"
         "true_distance,c_hat,candidates,query_time_us\n";
  for (const ExperimentRecord& r : records) {
    out << r.dataset_id << ',' << variant_name(r.variant) << ',' << r.ell << ',' << r.m << ','
        << r.seed << ',' << r.query_id << ',' << r.returned_id << ','
        << io::fmt(r.returned_distance) << ',' << io::fmt(r.true_distance) << ','
        << io::fmt(r.c_hat) << ',' << r.candidates << ',' << r.query_time_us << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

inline void write_summary_csv(const std::vector<SummaryRow>& summary, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "variant,ell,m,min,q1,median,q3,max,mean,count\n";
  for (const SummaryRow& row : summary) {
    out << variant_name(row.variant) << ',' << row.ell << ',' << row.m << ',' << io::fmt(row.min)
        << ',' << io::fmt(row.q1) << ',' << io::fmt(row.median) << ',' << io::fmt(row.q3) << ','
        << io::fmt(row.max) << ',' << io::fmt(row.mean) << ',' << row.count << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

// Annulus harness. Queries are drawn from the dataset; ground truth comes
// from exact annulus membership at width w (the structure must answer
// whenever that tighter annulus is populated). Success counts non-null,
// in-range answers on queries with a witness. repetitions > 1 builds that
// many independent structures per seed and takes the first success,
// the standard amplification loop.
struct AnnulusExperimentConfig {
  std::string dataset_id;
  const VectorDataset* data = nullptr;
  std::vector<double> r_grid{1.0};
  std::vector<double> w_grid{2.0};
  std::vector<double> c_grid{2.0};
  std::vector<double> W_grid{8.0};
  std::size_t seeds = 1;
  std::size_t queries = 1;
  std::size_t repetitions = 1;
  std::uint64_t master_seed = 42;
};

struct AnnulusExperimentRow {
  double r = 0, w = 0, c = 0, W = 0;
  AnnulusParams params;
  std::size_t queries = 0;           // total queries issued
  std::size_t with_witness = 0;      // queries where brute_annulus found a point
  std::size_t successes = 0;         // witness existed and a sound answer came back
  std::size_t null_count = 0;        // null answers (any cause)
  std::size_t exhausted_count = 0;   // nulls caused by queue exhaustion
  std::size_t soundness_violations = 0;  // non-null answers outside [r/(cw), cwr]
  double mean_candidates = 0.0;
  double success_rate = 0.0;  // successes / with_witness (0 if no witnesses)
};

inline std::vector<AnnulusExperimentRow> run_annulus_experiment(
    const AnnulusExperimentConfig& config) {
  if (config.data == nullptr) throw std::invalid_argument("run_annulus_experiment: no dataset");
  if (config.seeds == 0 || config.queries == 0 || config.repetitions == 0) {
    throw std::invalid_argument("run_annulus_experiment: counts must be >= 1");
  }
  const VectorDataset& data = *config.data;
  std::vector<AnnulusExperimentRow> rows;
  for (double r : config.r_grid) {
    for (double w : config.w_grid) {
      for (double c : config.c_grid) {
        for (double W : config.W_grid) {
          AnnulusExperimentRow row;
          row.r = r;
          row.w = w;
          row.c = c;
          row.W = W;
          row.params = derive_params(data.size(), data.dim(), r, w, c, W);
          std::uint64_t cell_seed = config.master_seed;
          for (double coord : {r, w, c, W})
            cell_seed = derive_stream(cell_seed, std::bit_cast<std::uint64_t>(coord));
          std::size_t total_candidates = 0;

          for (std::size_t s = 0; s < config.seeds; ++s) {
            std::uint64_t seed_base = derive_stream(cell_seed, s);
            std::vector<AnnulusIndex> indexes;
            indexes.reserve(config.repetitions);
            for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
              indexes.push_back(
                  AnnulusIndex::build(data, row.params, derive_stream(seed_base, 1 + rep)));
            }
            Rng query_rng(derive_stream(seed_base, 0));
            for (std::size_t qn = 0; qn < config.queries; ++qn) {
              auto query_id = static_cast<std::uint32_t>(query_rng.uniform_index(data.size()));
              const Vector& q = data[query_id];
              bool witness = brute_annulus(data, q, r, w).has_value();

              std::optional<std::uint32_t> answer;
              bool exhausted = false;
              for (const AnnulusIndex& idx : indexes) {
                AnnulusResult res = idx.query(q);
                total_candidates += res.candidates;
                if (res.id) {
                  answer = res.id;
                  double dist = l2_distance(q, data[*res.id]);
                  if (dist < r / (c * w) || dist > c * w * r) ++row.soundness_violations;
                  break;
                }
                exhausted = res.queue_exhausted;
              }
              ++row.queries;
              if (witness) ++row.with_witness;
              if (!answer) {
                ++row.null_count;
                if (exhausted) ++row.exhausted_count;
              } else if (witness) {
                ++row.successes;
              }
            }
          }
          row.mean_candidates =
              static_cast<double>(total_candidates) / static_cast<double>(row.queries);
          row.success_rate = row.with_witness == 0
                                 ? 0.0
                                 : static_cast<double>(row.successes) /
                                       static_cast<double>(row.with_witness);
          rows.push_back(std::move(row));
        }
      }
    }
  }
  return rows;
}

inline void write_annulus_csv(const std::vector<AnnulusExperimentRow>& rows,
                              const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "r,w,c,W,k,L,ell,m,cap,queries,with_witness,successes,success_rate,"
         "null_count,exhausted_count,soundness_violations,mean_candidates\n";
  for (const AnnulusExperimentRow& row : rows) {
    out << io::fmt(row.r) << ',' << io::fmt(row.w) << ',' << io::fmt(row.c) << ','
        << io::fmt(row.W) << ',' << row.params.k << ',' << row.params.L << ',' << row.params.ell
        << ',' << row.params.m << ',' << row.params.cap << ',' << row.queries << ','
        << row.with_witness << ',' << row.successes << ',' << io::fmt(row.success_rate) << ','
        << row.null_count << ',' << row.exhausted_count << ',' << row.soundness_violations << ','
        << io::fmt(row.mean_candidates) << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace afn
