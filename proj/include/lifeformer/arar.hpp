#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lifeformer/grid.hpp"
#include "lifeformer/model.hpp"
#include "lifeformer/rng.hpp"

namespace lifeformer {

/// Fraction of cells where the two grids disagree (0 when identical).
double error_rate(const Grid& predicted, const Grid& ground_truth);

struct StepPrediction {
  Grid grid;
  /// Set when the raw prediction contained bytes outside {'0','1'}; those
  /// cells are coerced to dead rather than aborting the rollout.
  bool had_invalid_bytes = false;
};

/// One next-state predictor feeding the recursive rollout loop.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual StepPrediction predict_next(const Grid& current) = 0;
};

/// Exact-rule predictor; substituting it for the model must reproduce the
/// engine rollout identically (harness self-check).
class OraclePredictor final : public Predictor {
 public:
  StepPrediction predict_next(const Grid& current) override;
};

class ModelPredictor final : public Predictor {
 public:
  ModelPredictor(const Model<float>& model, double temperature, Rng rng);
  StepPrediction predict_next(const Grid& current) override;

 private:
  const Model<float>* model_;
  double temperature_;
  Rng rng_;
};

/// States are 1-based: the IC is state 1, so a trace of `steps` iterations
/// holds steps + 1 states.
struct RolloutTrace {
  Grid ic;
  int steps = 0;
  double temperature = 0.0;
  std::vector<Grid> predicted;     // length steps + 1, [0] = IC
  std::vector<Grid> ground_truth;  // exact rollout, same length
  std::vector<double> error_rates;
  std::vector<std::uint8_t> had_invalid_bytes;
  std::optional<int> first_divergence;  // smallest 1-based state index with
                                        // error_rate > 0

  RolloutTrace() : ic(3) {}
};

/// Feeds each predicted state back as the next prompt for `steps`
/// iterations and scores every state against the exact rollout.
RolloutTrace arar_rollout(Predictor& predictor, const Grid& ic, int steps,
                          double temperature);

/// Writes error_rates.csv, per-state GT/Pred/Error frames as binary PGM
/// (state_%04d_{gt|pred|err}.pgm, live = 255), and trace.jsonl.
void export_trace(const RolloutTrace& trace, const std::string& out_dir);

}  // namespace lifeformer
