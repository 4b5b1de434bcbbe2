#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lifeformer/grid.hpp"
#include "lifeformer/rng.hpp"

namespace lifeformer {

/// Fraction of live cells, p1 = live / S^2.
double order_param(const Grid& g);

/// Binary Shannon entropy of the cell distribution, in shannons:
/// H = -(p0 log2 p0 + p1 log2 p1), with 0 log2 0 = 0.
double shannon_entropy(const Grid& g);

/// Row-major S^2-character string, '0'/'1' per cell.
std::string flatten(const Grid& g);

/// Inverse of flatten. Throws on wrong length or non-binary characters.
Grid unflatten(int grid_size, const std::string& cells);

/// Sequence length of a framed prompt for side length S: 2*S^2 + 23.
int prompt_length(int grid_size);

/// "@PredictNextState<" + flatten(ic) + "> [" — the generation prefix.
std::string prompt_prefix(const Grid& ic);

/// One training pair: an initial condition, its next game state, and the
/// framed prompt text the model is trained on.
struct GameRecord {
  Grid ic;
  Grid ngs;
  std::string prompt_text;
  double eta_measured = 0.0;
  // Dataset-file bookkeeping.
  int index = 0;
  double eta_target = 0.0;
};

/// Computes ngs = step(ic) and frames the full prompt
/// "@PredictNextState<IC> [NGS]$".
GameRecord make_record(const Grid& ic);

/// Each cell independently live with probability 0.5.
Grid gen_high_entropy_ic(int grid_size, Rng& rng);

/// Each cell independently live with probability eta.
Grid gen_ic_with_eta(int grid_size, double eta, Rng& rng);

/// n grids with live-cell probability spread linearly over [0, 1]:
/// sample k targets eta_k = k / (n - 1); a single sample targets 0.5.
/// Sample k draws from rng.derive(k), so generation is order-independent.
std::vector<Grid> gen_broad_entropy_set(int n, int grid_size, const Rng& rng);

enum class DatasetMode { high_entropy, broad_entropy };

struct DatasetSpec {
  int n_samples = 0;
  DatasetMode mode = DatasetMode::broad_entropy;
  std::uint64_t seed = 0;
  int grid_size = 32;
};

struct EtaHistogram {
  int bins = 10;
  std::vector<std::int64_t> counts;  // bin k covers [k/bins, (k+1)/bins)
};

struct DatasetSummary {
  int n_samples = 0;
  double mean_eta = 0.0;
  EtaHistogram histogram;
};

EtaHistogram eta_histogram(const std::vector<GameRecord>& records, int bins);

/// Writes one record per line: {"index":..,"eta_target":..,"ic":..,"ngs":..}
/// (UTF-8, LF). Deterministic for a fixed spec. Returns the summary.
DatasetSummary build_datasets(const DatasetSpec& spec, const std::string& out_path);

std::vector<GameRecord> generate_records(const DatasetSpec& spec);

/// Parses a dataset file and re-verifies ngs == step(ic) for every record.
std::vector<GameRecord> load_dataset(const std::string& path);

void write_histogram_csv(const EtaHistogram& hist, const std::string& path);

/// Number of initial conditions appearing in both sets. All-dead and
/// all-alive grids are excluded: the broad-entropy endpoints produce them
/// deterministically in every set.
int count_shared_ics(const std::vector<GameRecord>& a,
                     const std::vector<GameRecord>& b);

/// One testing-set sample: an initial condition plus its exact 10-state
/// evolution (the IC and nine successors).
struct TestingSample {
  std::string name;
  std::optional<double> eta_target;
  std::vector<Grid> states;
};

struct TestingSet {
  int grid_size = 32;
  std::vector<TestingSample> samples;
};

/// 10 samples: 5 stochastic ICs at eta targets {0, 0.25, 0.5, 0.75, 1} and
/// the named patterns centered on the torus. Patterns that do not fit the
/// grid are replaced by extra stochastic ICs at eta 0.5.
TestingSet build_testing_set(int grid_size, std::uint64_t seed);

void save_testing_set(const TestingSet& set, const std::string& path);
TestingSet load_testing_set(const std::string& path);

}  // namespace lifeformer
