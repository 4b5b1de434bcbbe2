#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "lifeformer/arar.hpp"
#include "lifeformer/datagen.hpp"
#include "lifeformer/life.hpp"
#include "lifeformer/patterns.hpp"
#include "lifeformer/util.hpp"

using namespace lifeformer;

namespace {

// injects a single wrong cell at one chosen iteration, exact otherwise
class FlakyPredictor final : public Predictor {
 public:
  explicit FlakyPredictor(int fail_at_iteration) : fail_at_(fail_at_iteration) {}
  StepPrediction predict_next(const Grid& current) override {
    ++iteration_;
    Grid next = step(current);
    if (iteration_ == fail_at_) {
      next.set(0, 0, next.at(0, 0) ? 0 : 1);
    }
    return {next, false};
  }

 private:
  int fail_at_;
  int iteration_ = 0;
};

class NonBinaryPredictor final : public Predictor {
 public:
  StepPrediction predict_next(const Grid& current) override {
    return {step(current), true};
  }
};

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "lifeformer_arar_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("arar") {

TEST_CASE("error rate basics") {
  Grid a(32), b(32);
  CHECK(error_rate(a, b) == 0.0);
  b.set(3, 7, 1);
  CHECK(error_rate(a, b) == doctest::Approx(1.0 / 1024.0).epsilon(1e-15));
  Grid full(32);
  for (int r = 0; r < 32; ++r) {
    for (int c = 0; c < 32; ++c) {
      full.set(r, c, 1);
    }
  }
  CHECK(error_rate(a, full) == 1.0);
  CHECK_THROWS_AS(error_rate(Grid(8), Grid(16)), std::invalid_argument);
}

TEST_CASE("error rate is symmetric") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    Grid a(8), b(8);
    for (int r = 0; r < 8; ++r) {
      for (int c = 0; c < 8; ++c) {
        a.set(r, c, rng.uniform01() < 0.5 ? 1 : 0);
        b.set(r, c, rng.uniform01() < 0.5 ? 1 : 0);
      }
    }
    CHECK(error_rate(a, b) == error_rate(b, a));
    CHECK(error_rate(a, a) == 0.0);
  }
}

TEST_CASE("oracle predictor reproduces the engine rollout exactly") {
  const Grid ic = place_centered(pattern_by_name("r_pentomino"), 32);
  OraclePredictor oracle;
  const RolloutTrace trace = arar_rollout(oracle, ic, 249, 0.0);
  REQUIRE(trace.predicted.size() == 250);
  REQUIRE(trace.ground_truth.size() == 250);
  const auto expected = rollout(ic, 249);
  for (std::size_t k = 0; k < expected.size(); ++k) {
    CHECK(trace.predicted[k] == expected[k]);
    CHECK(trace.error_rates[k] == 0.0);
  }
  CHECK_FALSE(trace.first_divergence.has_value());
}

TEST_CASE("first divergence uses 1-based state indexing") {
  const Grid ic = place_centered(pattern_by_name("glider"), 16);
  FlakyPredictor flaky(3);  // wrong cell on the 3rd iteration -> state 4
  const RolloutTrace trace = arar_rollout(flaky, ic, 6, 0.0);
  REQUIRE(trace.first_divergence.has_value());
  CHECK(*trace.first_divergence == 4);
  CHECK(trace.error_rates[0] == 0.0);
  CHECK(trace.error_rates[3] > 0.0);
}

TEST_CASE("invalid byte flag propagates into the trace") {
  NonBinaryPredictor weird;
  const RolloutTrace trace = arar_rollout(weird, Grid(8), 2, 0.0);
  CHECK(trace.had_invalid_bytes[0] == 0);
  CHECK(trace.had_invalid_bytes[1] == 1);
  CHECK(trace.had_invalid_bytes[2] == 1);
}

TEST_CASE("exported traces have full frame triplets and XOR error frames") {
  const auto dir = temp_dir();
  const Grid ic = place_centered(pattern_by_name("blinkers"), 16);
  FlakyPredictor flaky(2);
  const RolloutTrace trace = arar_rollout(flaky, ic, 4, 0.0);
  export_trace(trace, dir.string());

  int frames = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".pgm") {
      ++frames;
    }
  }
  CHECK(frames == 3 * 5);

  // error frame == cellwise XOR of gt and pred
  const std::string gt = read_file((dir / "state_0003_gt.pgm").string());
  const std::string pred = read_file((dir / "state_0003_pred.pgm").string());
  const std::string err = read_file((dir / "state_0003_err.pgm").string());
  const std::size_t header = gt.find("255\n") + 4;
  REQUIRE(gt.size() == pred.size());
  REQUIRE(gt.size() == err.size());
  for (std::size_t i = header; i < gt.size(); ++i) {
    const bool differ = gt[i] != pred[i];
    CHECK((err[i] != 0) == differ);
  }

  std::ifstream csv((dir / "error_rates.csv").string());
  std::string line;
  std::getline(csv, line);
  CHECK(line == "state_index,error_rate,first_divergence");
  int rows = 0;
  bool flagged = false;
  while (std::getline(csv, line)) {
    ++rows;
    if (line.find(",1") == line.size() - 2) {
      flagged = true;
    }
  }
  CHECK(rows == 5);
  CHECK(flagged);
}

TEST_CASE("zero-error trace exports an all-zero error column") {
  const auto dir = temp_dir() / "clean";
  OraclePredictor oracle;
  const RolloutTrace trace = arar_rollout(oracle, Grid(8), 3, 0.0);
  export_trace(trace, dir.string());
  std::ifstream csv((dir / "error_rates.csv").string());
  std::string line;
  std::getline(csv, line);
  while (std::getline(csv, line)) {
    CHECK(line.find(",0,") != std::string::npos);
  }
}

}  // TEST_SUITE
