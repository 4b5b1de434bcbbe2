#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lifeformer/datagen.hpp"
#include "lifeformer/model.hpp"
#include "lifeformer/rng.hpp"

namespace lifeformer {

/// Fraction of positions where the two cell strings agree.
/// Throws on length mismatch.
double accuracy(const std::string& predicted, const std::string& ground_truth);

/// Produces the S^2 predicted next-state cells for an initial condition.
/// Abstracted so the harness can be exercised with an exact oracle or other
/// stand-ins in place of a model.
using CellGenerator =
    std::function<std::string(const Grid& ic, double temperature, Rng& rng)>;

/// Prompts the model with "@PredictNextState<IC> [" and decodes exactly S^2
/// generated tokens. The closing "]$" is neither generated nor scored.
CellGenerator model_cell_generator(const Model<float>& model);

/// Generator that answers with the exact Life rule; harness self-check.
CellGenerator oracle_cell_generator();

struct SampleScore {
  std::string name;
  double accuracy = 0.0;
  std::vector<int> mismatch_positions;
  std::string predicted;
  std::string expected;
};

struct AccuracyReport {
  int epoch = 0;
  double temperature = 0.0;
  std::uint64_t eval_seed = 0;
  double accuracy = 0.0;  // over all cells of the testing set
  std::vector<SampleScore> samples;
};

/// Scores the generator on every testing-set sample at each temperature.
/// Per-(temperature, sample) sampling streams derive from eval_seed, so a
/// report is reproducible; temperature 0 is deterministic outright.
std::vector<AccuracyReport> benchmark(const CellGenerator& gen,
                                      const TestingSet& testing_set,
                                      const std::vector<double>& temperatures,
                                      std::uint64_t eval_seed, int epoch = 0,
                                      int threads = 1);

void write_benchmark_csv(const std::vector<AccuracyReport>& reports,
                         const std::string& path);
void write_benchmark_samples_csv(const std::vector<AccuracyReport>& reports,
                                 const std::string& path);
/// Dumps one mismatch map per imperfect sample: '0' agree, '1' differ.
void write_mismatch_maps(const std::vector<AccuracyReport>& reports,
                         const std::string& dir);

struct SweepRow {
  double eta_target = 0.0;
  double eta_measured = 0.0;
  double accuracy = 0.0;
};

/// Fresh ICs with eta targets linear on [0, 1]; per-sample accuracy against
/// the exact next state.
std::vector<SweepRow> order_param_sweep(const CellGenerator& gen, int grid_size,
                                        int n_samples, double temperature,
                                        std::uint64_t seed, int threads = 1);

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);

}  // namespace lifeformer
