// Acceptance suite: every release criterion in one binary. Each criterion
// prints exactly one PASS/FAIL line; the exit code is the failure count.
//
// The desk-scale training criterion caches its artifacts (datasets, run
// outputs) under an acceptance cache directory — LIFEFORMER_ACCEPT_CACHE or
// the build-tree default — and retrains only when the cached run does not
// match the pinned configuration.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lifeformer/arar.hpp"
#include "lifeformer/checkpoint.hpp"
#include "lifeformer/datagen.hpp"
#include "lifeformer/evaluator.hpp"
#include "lifeformer/life.hpp"
#include "lifeformer/linalg.hpp"
#include "lifeformer/manifest.hpp"
#include "lifeformer/model.hpp"
#include "lifeformer/patterns.hpp"
#include "lifeformer/rng.hpp"
#include "lifeformer/trainer.hpp"
#include "lifeformer/util.hpp"

#ifndef LIFEFORMER_BIN_PATH
#define LIFEFORMER_BIN_PATH "lifeformer"
#endif
#ifndef ACCEPTANCE_CACHE_DEFAULT
#define ACCEPTANCE_CACHE_DEFAULT "acceptance_cache"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lifeformer;
using Clock = std::chrono::steady_clock;

namespace {

struct Criterion {
  std::string name;
  std::function<std::string()> run;  // returns "" on pass, reason on fail
};

std::string cache_root() {
  if (const char* env = std::getenv("LIFEFORMER_ACCEPT_CACHE")) {
    return env;
  }
  return ACCEPTANCE_CACHE_DEFAULT;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LIFEFORMER_BIN_PATH) + " " + args +
                          " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

Grid random_grid(int size, Rng& rng, double density = 0.5) {
  Grid g(size);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      g.set(r, c, rng.uniform01() < density ? 1 : 0);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------

std::string check_oracle_equivalence() {
  const auto start = Clock::now();
  for (std::uint32_t bits = 0; bits < (1u << 16); ++bits) {
    Grid g(4);
    for (int i = 0; i < 16; ++i) {
      g.set(i / 4, i % 4, (bits >> i) & 1u);
    }
    if (!(step(g) == oracle_step(g))) {
      return "disagreement on 4x4 grid " + std::to_string(bits);
    }
  }
  const double elapsed = seconds_since(start);
  if (elapsed >= 10.0) {
    return "exhaustive check took " + std::to_string(elapsed) + " s (>= 10 s)";
  }
  return {};
}

std::string check_pattern_regression() {
  Grid blinker(8);
  blinker.set(4, 3, 1);
  blinker.set(4, 4, 1);
  blinker.set(4, 5, 1);
  const auto blink_states = rollout(blinker, 2);
  if (!(blink_states[2] == blinker) || blink_states[1] == blinker) {
    return "blinker is not a period-2 oscillator";
  }
  const Grid glider = place_centered(pattern_by_name("glider"), 32);
  const auto glider_states = rollout(glider, 4);
  if (!(glider_states[4] == shift(glider, 1, 1))) {
    return "glider did not translate by (+1,+1) after 4 steps";
  }
  return {};
}

std::string check_prompt_geometry() {
  for (int grid_size : {32, 8}) {
    const int expected = grid_size == 32 ? 2071 : 151;
    if (prompt_length(grid_size) != expected) {
      return "prompt_length(" + std::to_string(grid_size) + ") != " +
             std::to_string(expected);
    }
    DatasetSpec spec{64, DatasetMode::broad_entropy, 17, grid_size};
    for (const auto& rec : generate_records(spec)) {
      if (static_cast<int>(rec.prompt_text.size()) != expected) {
        return "generated record of length " +
               std::to_string(rec.prompt_text.size()) + " at S=" +
               std::to_string(grid_size);
      }
    }
  }
  return {};
}

std::string check_entropy_math() {
  Grid half(32);
  for (int i = 0; i < 512; ++i) {
    half.set(i / 32, i % 32, 1);
  }
  if (std::abs(shannon_entropy(half) - 1.0) > 1e-12) {
    return "H at p1=0.5 is not 1 Sh within 1e-12";
  }
  Rng rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    const Grid g = random_grid(32, rng, rng.uniform01());
    if (shannon_entropy(g) != shannon_entropy(complement(g))) {
      return "complement symmetry broken at trial " + std::to_string(trial);
    }
    if (order_param(complement(g)) != 1.0 - order_param(g)) {
      return "order parameter complement identity broken";
    }
  }
  return {};
}

std::string check_dataset_shape() {
  const auto broad =
      generate_records({10000, DatasetMode::broad_entropy, 41, 32});
  std::array<int, 10> deciles{};
  for (const auto& rec : broad) {
    int bin = static_cast<int>(rec.eta_measured * 10);
    bin = std::min(bin, 9);
    ++deciles[static_cast<std::size_t>(bin)];
  }
  for (int bin = 0; bin < 10; ++bin) {
    const int count = deciles[static_cast<std::size_t>(bin)];
    if (count < 800 || count > 1200) {
      return "broad decile " + std::to_string(bin) + " holds " +
             std::to_string(count) + "/10000 (outside 10% +/- 2%)";
    }
  }
  const auto high = generate_records({10000, DatasetMode::high_entropy, 42, 32});
  double mean_eta = 0.0;
  for (const auto& rec : high) {
    mean_eta += rec.eta_measured;
  }
  mean_eta /= static_cast<double>(high.size());
  if (std::abs(mean_eta - 0.5) > 0.01) {
    return "high-entropy mean eta " + std::to_string(mean_eta) +
           " departs from 0.5 by more than 0.01";
  }
  return {};
}

std::string check_gradient_correctness() {
  const auto start = Clock::now();
  ModelConfig cfg;
  cfg.max_seq_len = 16;
  cfg.dim = 8;
  cfg.depth = 1;
  cfg.heads = 2;
  cfg.head_dim = 4;
  Model<double> model(cfg);
  Rng rng(7);
  model.params.init_weights(rng);
  TokenSequence tokens;
  Rng token_rng(8);
  for (int i = 0; i < 12; ++i) {
    tokens.push_back(static_cast<int>(token_rng.below(256)));
  }
  auto [grads, loss] = compute_batch_gradients(model, {tokens}, {});
  if (!std::isfinite(loss)) {
    return "non-finite loss";
  }
  const double h = 1e-5;
  ForwardCache<double> cache;
  auto loss_at = [&]() {
    forward(model, tokens, nullptr, cache);
    return cel_loss<double>(cache.logits, tokens);
  };
  auto params = model.params.arrays();
  auto grad_arrays = grads.arrays();

  // Directional probes: a central difference along a random direction v
  // must match g.v. Any wrong gradient component shows up here with a
  // healthy denominator.
  Rng dir_rng(99);
  for (int probe = 0; probe < 20; ++probe) {
    std::vector<std::vector<double>> direction(params.size());
    double analytic = 0.0;
    for (std::size_t a = 0; a < params.size(); ++a) {
      direction[a].resize(params[a].data->size());
      const auto& g = *grad_arrays[a].data;
      for (std::size_t i = 0; i < direction[a].size(); ++i) {
        direction[a][i] = dir_rng.normal();
        analytic += direction[a][i] * g[i];
      }
    }
    auto nudge = [&](double scale) {
      for (std::size_t a = 0; a < params.size(); ++a) {
        auto& data = *params[a].data;
        for (std::size_t i = 0; i < data.size(); ++i) {
          data[i] += scale * direction[a][i];
        }
      }
    };
    nudge(h);
    const double plus = loss_at();
    nudge(-2.0 * h);
    const double minus = loss_at();
    nudge(h);
    const double numeric = (plus - minus) / (2.0 * h);
    const double rel = std::abs(numeric - analytic) /
                       std::max({std::abs(numeric), std::abs(analytic), 1e-10});
    if (rel >= 1e-4) {
      return "directional derivative off by relative " + std::to_string(rel);
    }
  }

  // Per-coordinate scan. Coordinates whose gradient sits at the central
  // difference roundoff floor (|loss| * eps / h ~ 1e-10) are held to an
  // absolute bound well above that floor instead of the relative one.
  double max_rel = 0.0;
  for (std::size_t a = 0; a < params.size(); ++a) {
    auto& data = *params[a].data;
    const auto& g = *grad_arrays[a].data;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + h;
      const double plus = loss_at();
      data[i] = saved - h;
      const double minus = loss_at();
      data[i] = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double abs_err = std::abs(numeric - g[i]);
      if (abs_err < 1e-8) {
        continue;
      }
      const double rel =
          abs_err / std::max({std::abs(numeric), std::abs(g[i]), 1e-10});
      max_rel = std::max(max_rel, rel);
    }
  }
  const double elapsed = seconds_since(start);
  if (max_rel >= 1e-4) {
    return "max relative gradient error " + std::to_string(max_rel);
  }
  if (elapsed >= 300.0) {
    return "gradient check took " + std::to_string(elapsed) + " s (>= 5 min)";
  }
  return {};
}

std::string check_overfit_capacity() {
  const auto start = Clock::now();
  const Rng base(2121);
  std::vector<GameRecord> records;
  for (int k = 0; k < 32; ++k) {
    Rng sub = base.derive(static_cast<std::uint64_t>(k));
    records.push_back(make_record(gen_high_entropy_ic(8, sub)));
  }
  ModelConfig mcfg;
  mcfg.max_seq_len = prompt_length(8);
  mcfg.dim = 64;
  mcfg.depth = 2;
  mcfg.heads = 2;
  mcfg.head_dim = 32;
  TrainConfig tcfg;
  tcfg.batch_size = 8;
  tcfg.grad_accum = 1;
  tcfg.learning_rate = 1e-3;
  tcfg.mask_prob = 0.0;
  tcfg.seed = 11;
  Trainer trainer(mcfg, tcfg, tokenize_records(records), {});

  auto memorized = [&]() {
    Rng unused(0);
    for (const auto& rec : records) {
      const TokenSequence prompt = encode(prompt_prefix(rec.ic));
      const TokenSequence out =
          generate(trainer.model(), prompt, 64, 0.0, unused);
      if (decode(out) != flatten(rec.ngs)) {
        return false;
      }
    }
    return true;
  };

  while (trainer.steps_completed() < 2000) {
    trainer.run_epoch();
    if (trainer.steps_completed() % 48 == 0 || trainer.curves().train.back().loss < 0.35) {
      if (memorized()) {
        const double elapsed = seconds_since(start);
        if (elapsed >= 900.0) {
          return "memorized but took " + std::to_string(elapsed) + " s (>= 15 min)";
        }
        return {};
      }
    }
  }
  return memorized() ? std::string{}
                     : "not memorized within 2000 optimizer steps";
}

// -------------------------- desk-scale machinery ---------------------------

json expected_desk_data_config(int n, std::uint64_t seed) {
  return json{{"n", n}, {"mode", "broad"}, {"grid_size", 16}, {"seed", seed}};
}

json expected_desk_train_config(int depth) {
  return json{{"dim", 128},
              {"depth", depth},
              {"heads", 4},
              {"head_dim", 32},
              {"ffn_mult", 4},
              {"max_seq_len", 0},
              {"batch_size", 5},
              {"grad_accum", 5},
              {"learning_rate", 3e-4},
              {"mask_prob", 0.15},
              {"epochs", 20},
              {"seed", 7},
              {"checkpoint_every", 2},
              {"target_accuracy", 0.99},
              {"testing_seed", 303}};
}

bool manifest_config_matches(const std::string& manifest_path,
                             const json& expected,
                             const std::vector<std::string>& skip_keys = {}) {
  if (!fs::exists(manifest_path)) {
    return false;
  }
  json manifest;
  try {
    manifest = load_manifest(manifest_path);
  } catch (...) {
    return false;
  }
  if (!manifest.contains("config")) {
    return false;
  }
  const json& config = manifest["config"];
  for (auto it = expected.begin(); it != expected.end(); ++it) {
    if (std::find(skip_keys.begin(), skip_keys.end(), it.key()) !=
        skip_keys.end()) {
      continue;
    }
    if (!config.contains(it.key()) || config[it.key()] != it.value()) {
      return false;
    }
  }
  return true;
}

// Ensures a finished desk-scale run exists in the cache, training one via
// the CLI if needed. Returns the run directory or an error message prefixed
// with "!".
std::string ensure_desk_run(int depth) {
  const fs::path root = fs::path(cache_root()) / (depth == 6 ? "desk" : "desk8");
  const fs::path data_dir = root / "data";
  const fs::path val_dir = root / "val";
  const fs::path train_dir = root / "train";

  if (!manifest_config_matches((data_dir / "manifest.json").string(),
                               expected_desk_data_config(10000, 101))) {
    fs::remove_all(data_dir);
    if (run_cli("gen --n 10000 --mode broad --grid-size 16 --seed 101 --out " +
                data_dir.string()) != 0) {
      return "!failed to generate the training dataset";
    }
  }
  if (!manifest_config_matches((val_dir / "manifest.json").string(),
                               expected_desk_data_config(200, 102))) {
    fs::remove_all(val_dir);
    if (run_cli("gen --n 200 --mode broad --grid-size 16 --seed 102 --out " +
                val_dir.string()) != 0) {
      return "!failed to generate the validation dataset";
    }
  }
  const bool cached =
      manifest_config_matches((train_dir / "manifest.json").string(),
                              expected_desk_train_config(depth),
                              {"data", "val_data"}) &&
      fs::exists(train_dir / "checkpoint_last.bin");
  if (!cached) {
    fs::remove_all(train_dir);
    std::ostringstream cmd;
    cmd << "train --data " << (data_dir / "dataset.jsonl").string()
        << " --val-data " << (val_dir / "dataset.jsonl").string()
        << " --dim 128 --depth " << depth
        << " --heads 4 --head-dim 32 --batch-size 5 --grad-accum 5"
        << " --lr 3e-4 --mask-prob 0.15 --epochs 20 --seed 7"
        << " --checkpoint-every 2 --target-accuracy 0.99 --testing-seed 303"
        << " --out " << train_dir.string();
    std::cout << "  [desk-scale] training depth-" << depth
              << " model (hours on one CPU core)..." << std::endl;
    if (run_cli(cmd.str()) != 0) {
      return "!desk-scale training run failed";
    }
  }
  return train_dir.string();
}

// run directory of the desk-scale model that met the accuracy target; the
// temperature-ordering criterion evaluates the same model
std::string g_passing_desk_run;

std::string check_desk_scale_training() {
  for (int depth : {6, 8}) {  // depth 8 is the sanctioned fallback
    const std::string run_dir = ensure_desk_run(depth);
    if (!run_dir.empty() && run_dir[0] == '!') {
      return run_dir.substr(1);
    }
    CheckpointMeta meta;
    const Model<float> model =
        load_model(run_dir + "/checkpoint_last.bin", &meta);
    if (meta.epoch > 20) {
      return "run exceeded 20 epochs";
    }
    const TestingSet testing = build_testing_set(16, 303);
    const auto reports =
        benchmark(model_cell_generator(model), testing, {0.0}, 303, meta.epoch);
    if (reports[0].accuracy >= 0.99) {
      std::cout << "  [desk-scale] depth " << depth << ", epoch " << meta.epoch
                << ", temperature-0 accuracy " << reports[0].accuracy
                << std::endl;
      g_passing_desk_run = run_dir;
      return {};
    }
    std::cout << "  [desk-scale] depth " << depth << " reached only "
              << reports[0].accuracy << std::endl;
  }
  return "accuracy below 0.99 within 20 epochs at depth 6 and at depth 8";
}

std::string check_temperature_ordering() {
  std::string run_dir = g_passing_desk_run;
  if (run_dir.empty()) {
    run_dir = ensure_desk_run(6);
  }
  if (!run_dir.empty() && run_dir[0] == '!') {
    return run_dir.substr(1);
  }
  const Model<float> model = load_model(run_dir + "/checkpoint_last.bin");
  const TestingSet testing = build_testing_set(16, 303);
  double mean_t0 = 0.0, mean_t1 = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto reports = benchmark(model_cell_generator(model), testing,
                                   {0.0, 1.0}, seed);
    mean_t0 += reports[0].accuracy;
    mean_t1 += reports[1].accuracy;
  }
  mean_t0 /= 5.0;
  mean_t1 /= 5.0;
  std::cout << "  [temperature] mean accuracy T=0: " << mean_t0
            << ", T=1: " << mean_t1 << std::endl;
  if (mean_t0 < mean_t1) {
    return "temperature 0 accuracy " + std::to_string(mean_t0) +
           " below temperature 1 accuracy " + std::to_string(mean_t1);
  }
  return {};
}

std::string check_arar_harness_identity() {
  const TestingSet testing = build_testing_set(32, 303);
  for (const auto& sample : testing.samples) {
    OraclePredictor oracle;
    const RolloutTrace trace = arar_rollout(oracle, sample.states[0], 249, 0.0);
    if (trace.predicted.size() != 250) {
      return "trace for " + sample.name + " lacks 250 states";
    }
    const auto expected = rollout(sample.states[0], 249);
    for (std::size_t k = 0; k < expected.size(); ++k) {
      if (!(trace.predicted[k] == expected[k]) || trace.error_rates[k] != 0.0) {
        return "oracle rollout diverged for " + sample.name + " at state " +
               std::to_string(k + 1);
      }
    }
    if (trace.first_divergence.has_value()) {
      return "spurious first_divergence for " + sample.name;
    }
  }
  return {};
}

std::string check_cross_module_identity() {
  Rng rng(606);
  const std::array<int, 4> sizes = {4, 8, 16, 32};  // S^2 cells divide exactly
  for (int trial = 0; trial < 1000; ++trial) {
    const int size = sizes[static_cast<std::size_t>(rng.below(sizes.size()))];
    const Grid a = random_grid(size, rng, rng.uniform01());
    const Grid b = random_grid(size, rng, rng.uniform01());
    if (1.0 - error_rate(a, b) != accuracy(flatten(a), flatten(b))) {
      return "identity broken at trial " + std::to_string(trial);
    }
  }
  return {};
}

std::string check_fcm_statistics() {
  Rng rng(707);
  const int length = 535;
  const int draws = 100000;
  std::int64_t hidden = 0;
  for (int d = 0; d < draws; ++d) {
    const auto mask = fcm_mask(length, 0.15, rng);
    if (mask[0] != 0) {
      return "position 0 was hidden";
    }
    hidden += std::accumulate(mask.begin(), mask.end(), std::int64_t{0});
  }
  const double fraction =
      static_cast<double>(hidden) / (static_cast<double>(draws) * (length - 1));
  if (std::abs(fraction - 0.15) > 0.01) {
    return "hidden fraction " + std::to_string(fraction) +
           " outside 0.15 +/- 0.01";
  }
  return {};
}

std::string check_manifest_reproducibility() {
  const fs::path root = fs::temp_directory_path() / "lifeformer_acceptance_repro";
  fs::remove_all(root);
  fs::create_directories(root);

  // dataset generation, replayed from its manifest
  const fs::path gen_a = root / "gen_a";
  const fs::path gen_b = root / "gen_b";
  if (run_cli("gen --n 500 --mode broad --grid-size 8 --seed 5 --out " +
              gen_a.string()) != 0) {
    return "gen run failed";
  }
  if (run_cli("replay --manifest " + (gen_a / "manifest.json").string() +
              " --out " + gen_b.string()) != 0) {
    return "gen replay failed";
  }
  for (const char* name : {"dataset.jsonl", "eta_histogram.csv"}) {
    if (sha256_file((gen_a / name).string()) !=
        sha256_file((gen_b / name).string())) {
      return std::string("gen artifact differs after replay: ") + name;
    }
  }

  // a small training run, replayed from its manifest
  const fs::path data_dir = root / "data";
  if (run_cli("gen --n 16 --mode high --grid-size 8 --seed 6 --out " +
              data_dir.string()) != 0) {
    return "training dataset generation failed";
  }
  const std::string train_flags =
      "train --data " + (data_dir / "dataset.jsonl").string() +
      " --dim 32 --depth 1 --heads 2 --head-dim 16 --batch-size 4"
      " --grad-accum 2 --epochs 1 --seed 9 --out ";
  const fs::path train_a = root / "train_a";
  const fs::path train_b = root / "train_b";
  if (run_cli(train_flags + train_a.string()) != 0) {
    return "train run failed";
  }
  if (run_cli("replay --manifest " + (train_a / "manifest.json").string() +
              " --out " + train_b.string()) != 0) {
    return "train replay failed";
  }
  for (const char* name : {"checkpoint_last.bin", "loss_train.csv"}) {
    if (sha256_file((train_a / name).string()) !=
        sha256_file((train_b / name).string())) {
      return std::string("train artifact differs after replay: ") + name;
    }
  }
  fs::remove_all(root);
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  la::use_single_threaded_blas();
  std::vector<Criterion> criteria = {
      {"oracle equivalence (all 4x4 grids, < 10 s)", check_oracle_equivalence},
      {"pattern regression (blinker period 2, glider +1+1 per 4 steps)",
       check_pattern_regression},
      {"prompt geometry (2071 bytes at S=32, 151 at S=8)", check_prompt_geometry},
      {"entropy math (1 Sh at p1=0.5 within 1e-12, complement symmetry)",
       check_entropy_math},
      {"dataset shape (broad deciles 10% +/- 2%, high mean eta 0.5 +/- 0.01)",
       check_dataset_shape},
      {"gradient correctness (finite differences, rel err < 1e-4, < 5 min)",
       check_gradient_correctness},
      {"overfit capacity (32 records memorized within 2000 steps, < 15 min)",
       check_overfit_capacity},
      {"desk-scale training (S=16, accuracy >= 0.99 within 20 epochs)",
       check_desk_scale_training},
      {"temperature ordering (T=0 accuracy >= T=1, 5 seeds)",
       check_temperature_ordering},
      {"arar harness identity (oracle rollout, 249 steps, 10 testing ICs)",
       check_arar_harness_identity},
      {"cross-module identity (1 - error_rate == accuracy, 1000 grids)",
       check_cross_module_identity},
      {"fcm statistics (hidden fraction 0.15 +/- 0.01, position 0 never)",
       check_fcm_statistics},
      {"manifest reproducibility (replayed runs are bit-identical)",
       check_manifest_reproducibility},
  };

  std::string only;
  bool list = false;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--list") {
      list = true;
    } else if (arg == "--only" && i + 1 < argc) {
      only = argv[++i];
    } else if (arg == "--help") {
      std::cout << "usage: acceptance [--list] [--only <substring>]\n";
      return 0;
    }
  }
  if (list) {
    for (const auto& criterion : criteria) {
      std::cout << criterion.name << "\n";
    }
    return 0;
  }

  int failures = 0;
  for (const auto& criterion : criteria) {
    if (!only.empty() && criterion.name.find(only) == std::string::npos) {
      continue;
    }
    std::string reason;
    try {
      reason = criterion.run();
    } catch (const std::exception& e) {
      reason = std::string("exception: ") + e.what();
    }
    if (reason.empty()) {
      std::cout << "PASS — " << criterion.name << std::endl;
    } else {
      std::cout << "FAIL — " << criterion.name << " — " << reason << std::endl;
      ++failures;
    }
  }
  if (failures == 0) {
    std::cout << "all criteria passed" << std::endl;
  } else {
    std::cout << failures << " criteria failed" << std::endl;
  }
  return failures;
}
