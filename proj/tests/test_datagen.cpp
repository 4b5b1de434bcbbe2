#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lifeformer/datagen.hpp"
#include "lifeformer/life.hpp"
#include "lifeformer/patterns.hpp"
#include "lifeformer/util.hpp"

using namespace lifeformer;

namespace {

Grid grid_with_live(int size, int live) {
  Grid g(size);
  int placed = 0;
  for (int r = 0; r < size && placed < live; ++r) {
    for (int c = 0; c < size && placed < live; ++c) {
      g.set(r, c, 1);
      ++placed;
    }
  }
  return g;
}

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "lifeformer_datagen_test";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("datagen") {

TEST_CASE("order_param endpoints and midpoint") {
  CHECK(order_param(Grid(32)) == 0.0);
  CHECK(order_param(grid_with_live(32, 1024)) == 1.0);
  CHECK(order_param(grid_with_live(32, 512)) == 0.5);
}

TEST_CASE("order_param complement identity") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Grid g(16);
    for (int r = 0; r < 16; ++r) {
      for (int c = 0; c < 16; ++c) {
        g.set(r, c, rng.uniform01() < 0.3 ? 1 : 0);
      }
    }
    CHECK(order_param(complement(g)) == 1.0 - order_param(g));
  }
}

TEST_CASE("shannon entropy: maximum, zero, quarter point") {
  CHECK(shannon_entropy(grid_with_live(32, 512)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(shannon_entropy(Grid(32)) == 0.0);
  // p1 = 0.25, frozen from an independent high-precision evaluation
  CHECK(shannon_entropy(grid_with_live(32, 256)) ==
        doctest::Approx(0.811278124459132863).epsilon(1e-12));
}

TEST_CASE("shannon entropy complement symmetry") {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    Grid g(16);
    for (int r = 0; r < 16; ++r) {
      for (int c = 0; c < 16; ++c) {
        g.set(r, c, rng.uniform01() < rng.uniform01() ? 1 : 0);
      }
    }
    CHECK(shannon_entropy(g) ==
          doctest::Approx(shannon_entropy(complement(g))).epsilon(1e-12));
  }
}

TEST_CASE("flatten basics") {
  Grid g(3);
  g.set(0, 0, 1);
  g.set(1, 1, 1);
  CHECK(flatten(g) == "100010000");
  CHECK(flatten(Grid(32)) == std::string(1024, '0'));
}

TEST_CASE("flatten of a 2x2 layout (embedded in min grid)") {
  // row-major order: [[1,0],[0,1]] reads "1001"
  Grid g(4);
  g.set(0, 0, 1);
  g.set(1, 1, 1);
  const std::string flat = flatten(g);
  CHECK(flat.substr(0, 2) == "10");
  CHECK(flat.substr(4, 2) == "01");
}

TEST_CASE("flatten/unflatten round trip") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int size = 3 + static_cast<int>(rng.below(12));
    Grid g(size);
    for (int r = 0; r < size; ++r) {
      for (int c = 0; c < size; ++c) {
        g.set(r, c, rng.uniform01() < 0.5 ? 1 : 0);
      }
    }
    CHECK(unflatten(size, flatten(g)) == g);
  }
  CHECK_THROWS_AS(unflatten(3, "11"), std::invalid_argument);
  CHECK_THROWS_AS(unflatten(3, "11x111111"), std::invalid_argument);
}

TEST_CASE("prompt geometry") {
  CHECK(prompt_length(32) == 2071);
  CHECK(prompt_length(8) == 151);
  CHECK(prompt_length(16) == 535);
  Rng rng(6);
  GameRecord rec = make_record(gen_high_entropy_ic(32, rng));
  CHECK(rec.prompt_text.size() == 2071);
  GameRecord small = make_record(gen_high_entropy_ic(8, rng));
  CHECK(small.prompt_text.size() == 151);
}

TEST_CASE("record prompt frames and parses back") {
  Rng rng(7);
  const Grid ic = gen_high_entropy_ic(8, rng);
  const GameRecord rec = make_record(ic);
  CHECK(rec.ngs == step(ic));
  CHECK(rec.eta_measured == order_param(ic));
  const std::string& p = rec.prompt_text;
  CHECK(p.substr(0, 18) == "@PredictNextState<");
  CHECK(p.substr(18 + 64, 3) == "> [");
  CHECK(p.substr(p.size() - 2) == "]$");
  CHECK(unflatten(8, p.substr(18, 64)) == ic);
  CHECK(unflatten(8, p.substr(18 + 64 + 3, 64)) == rec.ngs);
}

TEST_CASE("all-dead record has an all-dead next state field") {
  const GameRecord rec = make_record(Grid(32));
  CHECK(rec.prompt_text.substr(18 + 1024 + 3, 1024) == std::string(1024, '0'));
}

TEST_CASE("high entropy generation is seed deterministic") {
  Rng a(42), b(42);
  CHECK(gen_high_entropy_ic(32, a) == gen_high_entropy_ic(32, b));
}

TEST_CASE("high entropy mean order parameter") {
  const Rng base(1234);
  double sum = 0.0;
  int inside = 0;
  const int n = 10000;
  for (int k = 0; k < n; ++k) {
    Rng sub = base.derive(static_cast<std::uint64_t>(k));
    const double eta = order_param(gen_high_entropy_ic(32, sub));
    sum += eta;
    if (eta > 0.45 && eta < 0.55) {
      ++inside;
    }
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.02));
  CHECK(std::abs(sum / n - 0.5) < 0.01);
  // binomial concentration: nearly all samples sit close to 0.5
  CHECK(inside >= n * 99 / 100);
}

TEST_CASE("broad entropy endpoints and decile flatness") {
  const Rng base(99);
  const auto grids = gen_broad_entropy_set(10000, 32, base);
  REQUIRE(grids.size() == 10000);
  CHECK(grids.front() == Grid(32));
  CHECK(grids.back().live_count() == 1024);
  std::array<int, 10> deciles{};
  for (const auto& g : grids) {
    int bin = static_cast<int>(order_param(g) * 10);
    if (bin > 9) {
      bin = 9;
    }
    ++deciles[static_cast<std::size_t>(bin)];
  }
  for (int bin = 0; bin < 10; ++bin) {
    CHECK(deciles[static_cast<std::size_t>(bin)] >= 800);
    CHECK(deciles[static_cast<std::size_t>(bin)] <= 1200);
  }
}

TEST_CASE("broad entropy with one sample targets 0.5") {
  const Rng base(100);
  const auto grids = gen_broad_entropy_set(1, 32, base);
  REQUIRE(grids.size() == 1);
  const double eta = order_param(grids[0]);
  CHECK(eta > 0.4);
  CHECK(eta < 0.6);
}

TEST_CASE("build_datasets writes deterministic records") {
  const auto dir = temp_dir();
  const auto path_a = (dir / "a.jsonl").string();
  const auto path_b = (dir / "b.jsonl").string();
  DatasetSpec spec{200, DatasetMode::broad_entropy, 7, 8};
  const auto summary = build_datasets(spec, path_a);
  build_datasets(spec, path_b);
  CHECK(summary.n_samples == 200);
  CHECK(sha256_file(path_a) == sha256_file(path_b));

  const auto records = load_dataset(path_a);
  REQUIRE(records.size() == 200);
  for (const auto& rec : records) {
    CHECK(rec.ngs == step(rec.ic));
    CHECK(rec.prompt_text.size() == static_cast<std::size_t>(prompt_length(8)));
  }
  std::int64_t total = 0;
  for (auto c : summary.histogram.counts) {
    total += c;
  }
  CHECK(total == 200);
}

TEST_CASE("build_datasets surfaces unwritable outputs") {
  DatasetSpec spec{5, DatasetMode::high_entropy, 1, 8};
  CHECK_THROWS_AS(build_datasets(spec, "/nonexistent_dir/out.jsonl"),
                  std::runtime_error);
}

TEST_CASE("train and validation sets share no nondegenerate ICs") {
  // 2^1024 configurations make collisions vanishingly rare away from the
  // eta endpoints; the degenerate all-dead/all-alive grids are excluded.
  DatasetSpec train_spec{10000, DatasetMode::broad_entropy, 11, 32};
  DatasetSpec val_spec{1000, DatasetMode::broad_entropy, 12, 32};
  const auto train_recs = generate_records(train_spec);
  const auto val_recs = generate_records(val_spec);
  CHECK(count_shared_ics(train_recs, val_recs) == 0);
}

TEST_CASE("histogram csv shape") {
  const auto dir = temp_dir();
  DatasetSpec spec{50, DatasetMode::high_entropy, 3, 8};
  const auto records = generate_records(spec);
  const auto hist = eta_histogram(records, 10);
  const auto path = (dir / "hist.csv").string();
  write_histogram_csv(hist, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "bin_low,bin_high,count");
  int lines = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++lines;
  }
  CHECK(lines == 10);
}

TEST_CASE("testing set structure at 32") {
  const TestingSet set = build_testing_set(32, 5);
  REQUIRE(set.samples.size() == 10);
  CHECK(set.samples[0].states[0] == Grid(32));             // eta 0
  CHECK(set.samples[4].states[0].live_count() == 1024);    // eta 1
  for (const auto& sample : set.samples) {
    REQUIRE(sample.states.size() == 10);
    for (std::size_t k = 0; k + 1 < sample.states.size(); ++k) {
      CHECK(sample.states[k + 1] == step(sample.states[k]));
      CHECK(sample.states[k + 1] == oracle_step(sample.states[k]));
    }
  }
  // named patterns present
  CHECK(set.samples[5].name == "glider");
  CHECK(set.samples[6].name == "cloverleaf");
  CHECK(set.samples[7].name == "hwss");
  CHECK(set.samples[8].name == "blinkers");
  CHECK(set.samples[9].name == "r_pentomino");
}

TEST_CASE("glider testing sample returns translated every 4 states") {
  const TestingSet set = build_testing_set(32, 5);
  const auto& glider = set.samples[5];
  CHECK(glider.states[4] == shift(glider.states[0], 1, 1));
  CHECK(glider.states[8] == shift(glider.states[0], 2, 2));
}

TEST_CASE("cloverleaf is a period-2 oscillator, hwss translates") {
  const TestingSet set = build_testing_set(32, 5);
  const auto& clover = set.samples[6];
  CHECK(clover.states[2] == clover.states[0]);
  CHECK_FALSE(clover.states[1] == clover.states[0]);
  const auto& ship = set.samples[7];
  bool translated = false;
  for (int dr = -2; dr <= 2 && !translated; ++dr) {
    for (int dc = -2; dc <= 2 && !translated; ++dc) {
      if ((dr != 0 || dc != 0) && ship.states[4] == shift(ship.states[0], dr, dc)) {
        translated = true;
      }
    }
  }
  CHECK(translated);
}

TEST_CASE("testing set round trips through its file form") {
  const auto dir = temp_dir();
  const TestingSet set = build_testing_set(16, 9);
  const auto path = (dir / "testing.jsonl").string();
  save_testing_set(set, path);
  const TestingSet loaded = load_testing_set(path);
  REQUIRE(loaded.samples.size() == set.samples.size());
  CHECK(loaded.grid_size == 16);
  for (std::size_t i = 0; i < set.samples.size(); ++i) {
    CHECK(loaded.samples[i].name == set.samples[i].name);
    CHECK(loaded.samples[i].states == set.samples[i].states);
  }
}

TEST_CASE("pattern placement rejects undersized grids") {
  CHECK_THROWS_AS(place_centered(pattern_by_name("cloverleaf"), 8),
                  std::invalid_argument);
  CHECK_THROWS_AS(pattern_by_name("no_such_pattern"), std::invalid_argument);
}

}  // TEST_SUITE
