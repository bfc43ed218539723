#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "triplerec/error.hpp"
#include "triplerec/informative.hpp"
#include "triplerec/metrics.hpp"
#include "triplerec/newick.hpp"
#include "triplerec/random.hpp"
#include "triplerec/sim.hpp"
#include "triplerec/supertree.hpp"

namespace triplerec {

struct ExperimentConfig {
  std::size_t replicates = 150;
  std::size_t min_species = 10;
  std::size_t max_species = 100;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  int max_retries = 1000;
  /// Parameter redraws per replicate after SimulationError.
  int max_redraws = 1000;
};

struct ExperimentRow {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::size_t n_species = 0;
  double dup_rate = 0.0;
  double loss_rate = 0.0;
  std::size_t n_dups = 0;
  std::size_t n_losses = 0;
  std::size_t n_genes = 0;
  std::size_t n_triples = 0;
  double split_recovery = 0.0;
  ContractionReport contraction;
  /// Parameter draws rejected because no gene tree covered every species.
  int redraws = 0;
};

/// Replicate `index`: draw k = 0, 1, ... uses seed derive_seed(master, index, k)
/// for n ~ U{min..max} and r_d, r_l ~ U[0,1), then simulates. Draws whose
/// rates never give a gene tree covering all species are replaced by the
/// next draw.
inline ExperimentRow run_replicate(const ExperimentConfig& config, std::size_t index) {
  if (config.min_species < 3 || config.max_species < config.min_species) {
    throw UsageError("species range must satisfy 3 <= min <= max");
  }
  for (int k = 0; k < config.max_redraws; ++k) {
    ExperimentRow row;
    row.index = index;
    row.redraws = k;
    row.seed = derive_seed(config.seed, index, static_cast<std::uint64_t>(k));
    Rng rng(row.seed);
    row.n_species = std::uniform_int_distribution<std::size_t>(config.min_species, config.max_species)(rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    row.dup_rate = unit(rng);
    row.loss_rate = unit(rng);
    std::optional<Scenario> scenario;
    try {
      scenario = simulate_scenario(row.n_species, row.dup_rate, row.loss_rate, row.seed, config.max_retries);
    } catch (const SimulationError&) {
      continue;
    }
    row.n_dups = scenario->duplications;
    row.n_losses = scenario->losses;
    row.n_genes = scenario->observable.tree().leaf_count();
    auto triples = species_triples_indexed(scenario->observable);
    row.n_triples = triples.size();
    const auto built = build_species_tree(scenario->observable.species_names(), std::move(triples));
    if (!built.consistent()) throw Error("simulated gene tree yielded inconsistent species triples");
    row.split_recovery = split_recovery(scenario->species, *built.tree);
    row.contraction = interior_vertex_deficit(scenario->species, *built.tree);
    return row;
  }
  throw SimulationError(config.max_redraws, "no parameter draw produced a gene tree covering every species");
}

/// Runs all replicates on a worker pool. Rows come back in replicate order
/// whatever the schedule. Non-contractions are logged to `log` if given.
inline std::vector<ExperimentRow> run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr) {
  std::vector<ExperimentRow> rows(config.replicates);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      try {
        rows[i] = run_replicate(config, i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = rows.size();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(rows.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  if (log) {
    for (const auto& row : rows) {
      if (!row.contraction.is_contraction) {
        *log << "warning: replicate " << row.index << " (seed " << row.seed
             << "): inferred tree is not a contraction of the true tree; cluster symmetric difference "
             << row.contraction.symmetric_difference << "\n";
      }
    }
  }
  return rows;
}

inline const char* kExperimentHeader = "seed\tn_species\tdup_rate\tloss_rate\tn_dups\tn_losses\tsplit_recovery\tdeficit";

inline std::string to_tsv_row(const ExperimentRow& row) {
  std::ostringstream out;
  out.precision(6);
  out << row.seed << '\t' << row.n_species << '\t' << row.dup_rate << '\t' << row.loss_rate << '\t' << row.n_dups
      << '\t' << row.n_losses << '\t' << row.split_recovery << '\t';
  if (row.contraction.deficit) {
    out << *row.contraction.deficit;
  } else {
    out << "NA";
  }
  return out.str();
}

struct SummaryCell {
  std::size_t dup_bin = 0;
  std::size_t loss_bin = 0;
  std::size_t count = 0;
  double mean_split_recovery = 0.0;
};

/// Mean split recovery on a bins x bins grid over [0,1)^2 of (dup, loss)
/// rates. Empty cells are omitted.
inline std::vector<SummaryCell> binned_summary(const std::vector<ExperimentRow>& rows, std::size_t bins = 10) {
  if (bins == 0) throw UsageError("bin count must be positive");
  std::vector<SummaryCell> grid(bins * bins);
  auto bin_of = [&](double r) { return std::min(bins - 1, static_cast<std::size_t>(r * static_cast<double>(bins))); };
  for (const auto& row : rows) {
    auto& cell = grid[bin_of(row.dup_rate) * bins + bin_of(row.loss_rate)];
    ++cell.count;
    cell.mean_split_recovery += row.split_recovery;
  }
  std::vector<SummaryCell> out;
  for (std::size_t d = 0; d < bins; ++d) {
    for (std::size_t l = 0; l < bins; ++l) {
      auto cell = grid[d * bins + l];
      if (cell.count == 0) continue;
      cell.dup_bin = d;
      cell.loss_bin = l;
      cell.mean_split_recovery /= static_cast<double>(cell.count);
      out.push_back(cell);
    }
  }
  return out;
}

}  // namespace triplerec
