// Command-line front end: dataset generation, intrinsic-dimensionality
// estimation, furthest-neighbor experiment grids, annulus-query experiments,
// the projection-tail Monte Carlo check, and MovieLens conversion.
//
// Exit codes: 0 success, 1 usage error, 2 malformed data, 3 internal error.

#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "afn/datasets.hpp"
#include "afn/experiment.hpp"
#include "afn/oracles.hpp"
#include "afn/projection_index.hpp"
#include "afn/serialize_util.hpp"

namespace {

// "5" -> {5}; "1,5,10" -> the list; "2..6" -> {2,3,4,5,6}.
std::vector<std::size_t> parse_size_grid(const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    std::string part = text.substr(start, comma == std::string::npos ? comma : comma - start);
    if (part.empty()) throw std::invalid_argument("empty entry in grid '" + text + "'");
    std::size_t dots = part.find("..");
    try {
      if (dots != std::string::npos) {
        std::size_t lo = std::stoull(part.substr(0, dots));
        std::size_t hi = std::stoull(part.substr(dots + 2));
        if (hi < lo) throw std::invalid_argument("descending range '" + part + "'");
        for (std::size_t v = lo; v <= hi; ++v) out.push_back(v);
      } else {
        out.push_back(std::stoull(part));
      }
    } catch (const std::logic_error&) {
      throw std::invalid_argument("bad grid entry '" + part + "' in '" + text + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw std::invalid_argument("empty grid '" + text + "'");
  return out;
}

std::vector<double> parse_double_grid(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    std::string part = text.substr(start, comma == std::string::npos ? comma : comma - start);
    if (part.empty()) throw std::invalid_argument("empty entry in grid '" + text + "'");
    char* end = nullptr;
    double v = std::strtod(part.c_str(), &end);
    if (end != part.c_str() + part.size() || !std::isfinite(v)) {
      throw std::invalid_argument("bad grid entry '" + part + "' in '" + text + "'");
    }
    out.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw std::invalid_argument("empty grid '" + text + "'");
  return out;
}

// "44:1000,8:8" -> {(44,1000), (8,8)}.
std::vector<std::pair<std::size_t, std::size_t>> parse_cells(const std::string& text) {
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    std::string part = text.substr(start, comma == std::string::npos ? comma : comma - start);
    std::size_t colon = part.find(':');
    if (part.empty() || colon == std::string::npos) {
      throw std::invalid_argument("bad cell '" + part + "', expected ell:m");
    }
    try {
      cells.emplace_back(std::stoull(part.substr(0, colon)), std::stoull(part.substr(colon + 1)));
    } catch (const std::logic_error&) {
      throw std::invalid_argument("bad cell '" + part + "', expected ell:m");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (cells.empty()) throw std::invalid_argument("no cells in '" + text + "'");
  return cells;
}

std::string basename_of(const std::string& path) {
  std::size_t slash = path.find_last_of("/\\");
  return slash == std::string::npos ? path : path.substr(slash + 1);
}

struct GenArgs {
  std::string kind, out;
  std::size_t n = 0, d = 0;
  std::uint64_t seed = 0;
  bool binary = false;
};

struct RhoArgs {
  std::string data;
  std::size_t pairs = 0;
  std::uint64_t seed = 0;
};

struct AfnRunArgs {
  std::string data, variant = "qd", ell_grid, m_grid, cells, out, summary, dataset_id;
  std::size_t seeds = 1, queries = 1;
  std::uint64_t master_seed = 42;
  bool omit_times = false;
};

struct AfnParamsArgs {
  std::size_t n = 0;
  double c = 0.0;
};

struct AnnulusRunArgs {
  std::string data, out, dataset_id;
  std::string r = "1", w = "2", c = "2", W = "8";
  std::size_t seeds = 1, queries = 1, repetitions = 1;
  std::uint64_t master_seed = 42;
};

struct Lemma3Args {
  std::size_t n = 0, trials = 0;
  double c = 0.0;
  std::uint64_t seed = 0;
};

struct ConvertArgs {
  std::string ratings, out, map;
};

void run_gen(const GenArgs& a) {
  afn::GeneratorKind kind;
  if (a.kind == "uniform") {
    kind = afn::GeneratorKind::uniform_cube;
  } else if (a.kind == "normal") {
    kind = afn::GeneratorKind::multivariate_normal;
  } else {
    throw std::invalid_argument("--kind must be uniform or normal, got '" + a.kind + "'");
  }
  auto data = afn::generate({kind, a.n, a.d, a.seed});
  if (a.binary) {
    afn::save_vectors_binary(data, a.out);
  } else {
    afn::save_vectors(data, a.out);
  }
  std::cout << "wrote " << a.out << ": " << data.size() << " points, dim " << data.dim() << '\n';
}

void run_rho(const RhoArgs& a) {
  auto data = afn::load_dataset(a.data);
  double rho = afn::rho_statistic(data, a.pairs, a.seed);
  std::cout << afn::io::fmt(rho) << '\n';
}

void run_afn(const AfnRunArgs& a) {
  auto data = afn::load_dataset(a.data);
  afn::ExperimentConfig config;
  config.dataset_id = a.dataset_id.empty() ? basename_of(a.data) : a.dataset_id;
  config.data = &data;
  if (a.variant == "qd") {
    config.variant = afn::Variant::qd;
  } else if (a.variant == "qi-extremes") {
    config.variant = afn::Variant::qi_extremes;
  } else if (a.variant == "qi-maxproj") {
    config.variant = afn::Variant::qi_maxproj;
  } else if (a.variant == "qi-depth") {
    config.variant = afn::Variant::qi_depth;
  } else {
    throw std::invalid_argument("unknown variant '" + a.variant + "'");
  }
  if (!a.cells.empty()) {
    config.cells = parse_cells(a.cells);
  } else if (!a.ell_grid.empty() && !a.m_grid.empty()) {
    for (std::size_t ell : parse_size_grid(a.ell_grid)) {
      for (std::size_t m : parse_size_grid(a.m_grid)) config.cells.emplace_back(ell, m);
    }
  } else {
    throw std::invalid_argument("need --cells, or both --ell-grid and --m-grid");
  }
  config.seeds = a.seeds;
  config.queries_per_seed = a.queries;
  config.master_seed = a.master_seed;
  config.omit_times = a.omit_times;

  auto out = afn::run_experiment(config);
  afn::write_records_csv(out.records, a.out);
  if (!a.summary.empty()) afn::write_summary_csv(out.summary, a.summary);
  std::cout << "wrote " << a.out << ": " << out.records.size() << " records\n";
  for (const auto& row : out.summary) {
    std::cout << "ell " << row.ell << " m " << row.m << ": median " << afn::io::fmt(row.median)
              << " mean " << afn::io::fmt(row.mean) << " max " << afn::io::fmt(row.max) << '\n';
  }
}

void run_afn_params(const AfnParamsArgs& a) {
  auto params = afn::default_params(a.n, a.c);
  std::cout << "ell " << params.ell << "\nm " << params.m << '\n';
}

void run_annulus(const AnnulusRunArgs& a) {
  auto data = afn::load_dataset(a.data);
  afn::AnnulusExperimentConfig config;
  config.dataset_id = a.dataset_id.empty() ? basename_of(a.data) : a.dataset_id;
  config.data = &data;
  config.r_grid = parse_double_grid(a.r);
  config.w_grid = parse_double_grid(a.w);
  config.c_grid = parse_double_grid(a.c);
  config.W_grid = parse_double_grid(a.W);
  config.seeds = a.seeds;
  config.queries = a.queries;
  config.repetitions = a.repetitions;
  config.master_seed = a.master_seed;

  auto rows = afn::run_annulus_experiment(config);
  afn::write_annulus_csv(rows, a.out);
  std::cout << "wrote " << a.out << ": " << rows.size() << " configurations\n";
  for (const auto& row : rows) {
    std::cout << "r " << afn::io::fmt(row.r) << " w " << afn::io::fmt(row.w) << " c "
              << afn::io::fmt(row.c) << " W " << afn::io::fmt(row.W) << ": success_rate "
              << afn::io::fmt(row.success_rate) << " (" << row.successes << '/' << row.with_witness
              << " with witness), soundness_violations " << row.soundness_violations << '\n';
  }
}

void run_lemma3(const Lemma3Args& a) {
  auto report = afn::lemma3_montecarlo(a.n, a.c, a.trials, a.seed);
  std::cout << "t " << afn::io::fmt(report.t) << '\n'
            << "delta " << afn::io::fmt(report.delta) << '\n'
            << "epsilon " << afn::io::fmt(report.epsilon) << '\n'
            << "far_rate " << afn::io::fmt(report.far_rate) << " far_bound "
            << afn::io::fmt(report.far_bound) << '\n'
            << "near_rate " << afn::io::fmt(report.near_rate) << " near_bound "
            << afn::io::fmt(report.near_bound) << '\n';
}

void run_convert(const ConvertArgs& a) {
  auto res = afn::load_movielens(a.ratings);
  if (res.duplicate_ratings > 0) {
    std::cerr << "warning: " << res.duplicate_ratings
              << " duplicate (user, movie) ratings; kept the last value of each\n";
  }
  afn::save_vectors_binary(res.data, a.out);
  afn::write_movie_mapping(res, a.map);
  std::cout << "wrote " << a.out << ": " << res.data.size() << " movies over " << res.data.dim()
            << " users; mapping in " << a.map << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"random-projection furthest neighbor toolkit"};
  app.require_subcommand(1);

  auto gen_args = std::make_shared<GenArgs>();
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  gen->add_option("--kind", gen_args->kind, "uniform | normal")->required();
  gen->add_option("--n", gen_args->n, "point count")->required();
  gen->add_option("--d", gen_args->d, "dimension")->required();
  gen->add_option("--seed", gen_args->seed, "generator seed");
  gen->add_option("--out", gen_args->out, "output path")->required();
  gen->add_flag("--binary", gen_args->binary, "write the binary container instead of text");
  gen->callback([gen_args] { run_gen(*gen_args); });

  auto rho_args = std::make_shared<RhoArgs>();
  auto* rho = app.add_subcommand("rho", "estimate intrinsic dimensionality from sampled pairs");
  rho->add_option("--data", rho_args->data, "dataset path")->required();
  rho->add_option("--pairs", rho_args->pairs, "number of sampled pairs")->required();
  rho->add_option("--seed", rho_args->seed, "sampling seed");
  rho->callback([rho_args] { run_rho(*rho_args); });

  auto afn_args = std::make_shared<AfnRunArgs>();
  auto* afn_run = app.add_subcommand("afn-run", "run a furthest-neighbor experiment grid");
  afn_run->add_option("--data", afn_args->data, "dataset path")->required();
  afn_run->add_option("--variant", afn_args->variant,
                      "qd | qi-extremes | qi-maxproj | qi-depth");
  afn_run->add_option("--ell-grid", afn_args->ell_grid, "ell values: '1,5,10' or '1..30'");
  afn_run->add_option("--m-grid", afn_args->m_grid, "m values, same syntax");
  afn_run->add_option("--cells", afn_args->cells,
                      "explicit ell:m pairs, e.g. '24:2,12:4' (overrides the grids)");
  afn_run->add_option("--seeds", afn_args->seeds, "index builds per cell");
  afn_run->add_option("--queries-per-seed", afn_args->queries, "queries per build");
  afn_run->add_option("--out", afn_args->out, "records CSV path")->required();
  afn_run->add_option("--summary", afn_args->summary, "summary CSV path");
  afn_run->add_option("--master-seed", afn_args->master_seed, "master seed");
  afn_run->add_option("--dataset-id", afn_args->dataset_id, "dataset column value");
  afn_run->add_flag("--omit-times", afn_args->omit_times,
                    "zero the query_time_us column for byte-stable reruns");
  afn_run->callback([afn_args] { run_afn(*afn_args); });

  auto params_args = std::make_shared<AfnParamsArgs>();
  auto* afn_params = app.add_subcommand("afn-params", "print the derived (ell, m) defaults");
  afn_params->add_option("--n", params_args->n, "dataset size")->required();
  afn_params->add_option("--c", params_args->c, "approximation factor")->required();
  afn_params->callback([params_args] { run_afn_params(*params_args); });

  auto ann_args = std::make_shared<AnnulusRunArgs>();
  auto* ann = app.add_subcommand("annulus-run", "run annulus-query experiments");
  ann->add_option("--data", ann_args->data, "dataset path")->required();
  ann->add_option("--r", ann_args->r, "annulus radius (comma list for a grid)");
  ann->add_option("--w", ann_args->w, "annulus width > 1 (comma list)");
  ann->add_option("--c", ann_args->c, "approximation factor > 1 (comma list)");
  ann->add_option("--bucket-width", ann_args->W, "hash bucket width W (comma list)");
  ann->add_option("--seeds", ann_args->seeds, "builds per configuration");
  ann->add_option("--queries", ann_args->queries, "queries per build");
  ann->add_option("--repetitions", ann_args->repetitions, "independent structures per query");
  ann->add_option("--master-seed", ann_args->master_seed, "master seed");
  ann->add_option("--out", ann_args->out, "results CSV path")->required();
  ann->callback([ann_args] { run_annulus(*ann_args); });

  auto lemma_args = std::make_shared<Lemma3Args>();
  auto* lemma = app.add_subcommand("lemma3", "Monte Carlo check of the projection tail bounds");
  lemma->add_option("--n", lemma_args->n, "dataset size the bounds refer to")->required();
  lemma->add_option("--c", lemma_args->c, "approximation factor")->required();
  lemma->add_option("--trials", lemma_args->trials, "sample count, >= 10000")->required();
  lemma->add_option("--seed", lemma_args->seed, "sampling seed");
  lemma->callback([lemma_args] { run_lemma3(*lemma_args); });

  auto conv_args = std::make_shared<ConvertArgs>();
  auto* conv = app.add_subcommand("convert-movielens", "ratings.csv -> sparse movie vectors");
  conv->add_option("--ratings", conv_args->ratings, "ratings.csv path")->required();
  conv->add_option("--out", conv_args->out, "binary vector output path")->required();
  conv->add_option("--map", conv_args->map, "movie id mapping CSV path")->required();
  conv->callback([conv_args] { run_convert(*conv_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const afn::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
