#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lifeformer/arar.hpp"
#include "lifeformer/checkpoint.hpp"
#include "lifeformer/datagen.hpp"
#include "lifeformer/evaluator.hpp"
#include "lifeformer/life.hpp"
#include "lifeformer/linalg.hpp"
#include "lifeformer/manifest.hpp"
#include "lifeformer/model.hpp"
#include "lifeformer/patterns.hpp"
#include "lifeformer/trainer.hpp"
#include "lifeformer/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lifeformer;

namespace {

using Clock = std::chrono::steady_clock;

int grid_size_from_seq(int seq_len) {
  const int cells2 = seq_len - 23;
  const int side = static_cast<int>(std::lround(std::sqrt(cells2 / 2)));
  if (2 * side * side + 23 != seq_len) {
    throw std::runtime_error("sequence length does not match any grid size");
  }
  return side;
}

Grid load_ic(const std::string& spec, int grid_size) {
  for (const auto& def : named_patterns()) {
    if (def.name == spec) {
      return place_centered(def, grid_size);
    }
  }
  return Grid::parse_rows(read_file(spec));
}

std::string resolve_out(const std::string& out) {
  fs::path path(out);
  if (path.is_relative()) {
    if (const char* root = std::getenv("LIFEFORMER_OUT_ROOT")) {
      path = fs::path(root) / path;
    }
  }
  fs::create_directories(path);
  return path.string();
}

DatasetMode parse_mode(const std::string& mode) {
  if (mode == "high") {
    return DatasetMode::high_entropy;
  }
  if (mode == "broad") {
    return DatasetMode::broad_entropy;
  }
  throw CLI::ValidationError("--mode must be high or broad");
}

// ---------------------------------------------------------------------------
// gen

struct GenParams {
  int n = 10000;
  std::string mode = "broad";
  int grid_size = 32;
  std::uint64_t seed = 0;
};

void to_json(json& j, const GenParams& p) {
  j = json{{"n", p.n}, {"mode", p.mode}, {"grid_size", p.grid_size}, {"seed", p.seed}};
}

void from_json(const json& j, GenParams& p) {
  p.n = j.at("n").get<int>();
  p.mode = j.at("mode").get<std::string>();
  p.grid_size = j.at("grid_size").get<int>();
  p.seed = j.at("seed").get<std::uint64_t>();
}

std::vector<std::string> run_gen(const GenParams& p, const std::string& out_dir) {
  DatasetSpec spec{p.n, parse_mode(p.mode), p.seed, p.grid_size};
  const auto summary = build_datasets(spec, out_dir + "/dataset.jsonl");
  write_histogram_csv(summary.histogram, out_dir + "/eta_histogram.csv");
  std::cout << "wrote " << summary.n_samples << " records, mean eta "
            << summary.mean_eta << "\n";
  return {"dataset.jsonl", "eta_histogram.csv"};
}

// ---------------------------------------------------------------------------
// train

struct TrainParams {
  std::string data;
  std::string val_data;
  int dim = 256;
  int depth = 12;
  int heads = 8;
  int head_dim = 64;
  int ffn_mult = 4;
  int max_seq_len = 0;  // 0 = derive from the dataset
  int batch_size = 5;
  int grad_accum = 5;
  double learning_rate = 1e-4;
  double mask_prob = 0.15;
  int epochs = 50;
  std::uint64_t seed = 0;
  int checkpoint_every = 2;
  double target_accuracy = 0.0;  // >0 enables epoch-end benchmarking
  std::uint64_t testing_seed = 0;
};

void to_json(json& j, const TrainParams& p) {
  j = json{{"data", p.data},
           {"val_data", p.val_data},
           {"dim", p.dim},
           {"depth", p.depth},
           {"heads", p.heads},
           {"head_dim", p.head_dim},
           {"ffn_mult", p.ffn_mult},
           {"max_seq_len", p.max_seq_len},
           {"batch_size", p.batch_size},
           {"grad_accum", p.grad_accum},
           {"learning_rate", p.learning_rate},
           {"mask_prob", p.mask_prob},
           {"epochs", p.epochs},
           {"seed", p.seed},
           {"checkpoint_every", p.checkpoint_every},
           {"target_accuracy", p.target_accuracy},
           {"testing_seed", p.testing_seed}};
}

void from_json(const json& j, TrainParams& p) {
  p.data = j.at("data").get<std::string>();
  p.val_data = j.value("val_data", std::string{});
  p.dim = j.at("dim").get<int>();
  p.depth = j.at("depth").get<int>();
  p.heads = j.at("heads").get<int>();
  p.head_dim = j.at("head_dim").get<int>();
  p.ffn_mult = j.at("ffn_mult").get<int>();
  p.max_seq_len = j.at("max_seq_len").get<int>();
  p.batch_size = j.at("batch_size").get<int>();
  p.grad_accum = j.at("grad_accum").get<int>();
  p.learning_rate = j.at("learning_rate").get<double>();
  p.mask_prob = j.at("mask_prob").get<double>();
  p.epochs = j.at("epochs").get<int>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.checkpoint_every = j.at("checkpoint_every").get<int>();
  p.target_accuracy = j.value("target_accuracy", 0.0);
  p.testing_seed = j.value("testing_seed", std::uint64_t{0});
}

std::vector<std::string> run_train(const TrainParams& p, const std::string& out_dir,
                                   int threads) {
  const auto train_data = load_dataset(p.data);
  std::vector<GameRecord> val_data;
  if (!p.val_data.empty()) {
    val_data = load_dataset(p.val_data);
  }
  if (train_data.empty()) {
    throw std::runtime_error("training dataset is empty");
  }
  const int seq_len = static_cast<int>(train_data[0].prompt_text.size());

  ModelConfig mcfg;
  mcfg.dim = p.dim;
  mcfg.depth = p.depth;
  mcfg.heads = p.heads;
  mcfg.head_dim = p.head_dim;
  mcfg.ffn_mult = p.ffn_mult;
  mcfg.max_seq_len = p.max_seq_len > 0 ? p.max_seq_len : seq_len;
  if (mcfg.max_seq_len < seq_len) {
    throw std::runtime_error("max_seq_len shorter than the dataset sequences");
  }
  TrainConfig tcfg;
  tcfg.batch_size = p.batch_size;
  tcfg.grad_accum = p.grad_accum;
  tcfg.learning_rate = p.learning_rate;
  tcfg.mask_prob = p.mask_prob;
  tcfg.epochs = p.epochs;
  tcfg.seed = p.seed;
  tcfg.checkpoint_every = p.checkpoint_every;

  TrainRunOptions opts;
  opts.out_dir = out_dir;
  std::vector<std::pair<int, double>> accuracy_rows;
  TestingSet testing;
  if (p.target_accuracy > 0.0) {
    const int grid_size = grid_size_from_seq(seq_len);
    testing = build_testing_set(grid_size, p.testing_seed);
    opts.on_epoch_end = [&](int epoch, Trainer& trainer) {
      const auto reports = benchmark(model_cell_generator(trainer.model()),
                                     testing, {0.0}, p.testing_seed, epoch,
                                     threads);
      const double acc = reports[0].accuracy;
      accuracy_rows.emplace_back(epoch, acc);
      std::cout << "epoch " << epoch << " benchmark accuracy " << acc
                << std::endl;
      return acc < p.target_accuracy;  // stop once reached
    };
  }

  const auto result = train(tcfg, mcfg, train_data, val_data, opts);

  std::vector<std::string> artifacts = {"loss_train.csv", "checkpoint_last.bin"};
  if (!val_data.empty()) {
    artifacts.push_back("loss_val.csv");
  } else {
    // train() writes the header-only file regardless
    artifacts.push_back("loss_val.csv");
  }
  for (const auto& path : result.checkpoints) {
    artifacts.push_back(fs::path(path).filename().string());
  }
  if (p.target_accuracy > 0.0) {
    std::ofstream acc_out(out_dir + "/accuracy_by_epoch.csv", std::ios::binary);
    acc_out << "epoch,temperature,accuracy\n";
    for (const auto& [epoch, acc] : accuracy_rows) {
      acc_out << epoch << ",0," << std::setprecision(17) << acc << '\n';
    }
    acc_out.flush();
    artifacts.push_back("accuracy_by_epoch.csv");
  }
  std::cout << "trained " << result.epochs_run << " epochs ("
            << (result.stopped_early ? "stopped early" : "full run") << ")\n";
  return artifacts;
}

// ---------------------------------------------------------------------------
// bench

struct BenchParams {
  std::string checkpoint;
  std::string testing_set;  // optional file; otherwise built from seed
  std::uint64_t testing_seed = 0;
  std::vector<double> temps = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::uint64_t eval_seed = 0;
  int epoch_label = 0;
};

void to_json(json& j, const BenchParams& p) {
  j = json{{"checkpoint", p.checkpoint},   {"testing_set", p.testing_set},
           {"testing_seed", p.testing_seed}, {"temps", p.temps},
           {"eval_seed", p.eval_seed},     {"epoch_label", p.epoch_label}};
}

void from_json(const json& j, BenchParams& p) {
  p.checkpoint = j.at("checkpoint").get<std::string>();
  p.testing_set = j.value("testing_set", std::string{});
  p.testing_seed = j.at("testing_seed").get<std::uint64_t>();
  p.temps = j.at("temps").get<std::vector<double>>();
  p.eval_seed = j.at("eval_seed").get<std::uint64_t>();
  p.epoch_label = j.value("epoch_label", 0);
}

std::vector<std::string> run_bench(const BenchParams& p, const std::string& out_dir,
                                   int threads) {
  CheckpointMeta meta;
  const Model<float> model = load_model(p.checkpoint, &meta);
  TestingSet testing;
  if (!p.testing_set.empty()) {
    testing = load_testing_set(p.testing_set);
  } else {
    testing = build_testing_set(grid_size_from_seq(model.cfg.max_seq_len),
                                p.testing_seed);
  }
  const int epoch = p.epoch_label > 0 ? p.epoch_label : meta.epoch;
  const auto reports = benchmark(model_cell_generator(model), testing, p.temps,
                                 p.eval_seed, epoch, threads);
  write_benchmark_csv(reports, out_dir + "/accuracy.csv");
  write_benchmark_samples_csv(reports, out_dir + "/accuracy_samples.csv");
  write_mismatch_maps(reports, out_dir + "/mismatch_maps");
  for (const auto& report : reports) {
    std::cout << "temperature " << report.temperature << " accuracy "
              << report.accuracy << "\n";
  }
  std::vector<std::string> artifacts = {"accuracy.csv", "accuracy_samples.csv"};
  if (fs::exists(out_dir + "/mismatch_maps")) {
    for (const auto& entry :
         fs::directory_iterator(out_dir + "/mismatch_maps")) {
      artifacts.push_back("mismatch_maps/" + entry.path().filename().string());
    }
  }
  return artifacts;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepParams {
  std::string checkpoint;
  int n = 110;
  double temp = 1.0;
  std::uint64_t seed = 0;
};

void to_json(json& j, const SweepParams& p) {
  j = json{{"checkpoint", p.checkpoint}, {"n", p.n}, {"temp", p.temp}, {"seed", p.seed}};
}

void from_json(const json& j, SweepParams& p) {
  p.checkpoint = j.at("checkpoint").get<std::string>();
  p.n = j.at("n").get<int>();
  p.temp = j.at("temp").get<double>();
  p.seed = j.at("seed").get<std::uint64_t>();
}

std::vector<std::string> run_sweep(const SweepParams& p, const std::string& out_dir,
                                   int threads) {
  const Model<float> model = load_model(p.checkpoint);
  const int grid_size = grid_size_from_seq(model.cfg.max_seq_len);
  const auto rows = order_param_sweep(model_cell_generator(model), grid_size,
                                      p.n, p.temp, p.seed, threads);
  write_sweep_csv(rows, out_dir + "/sweep.csv");
  double worst = 1.0;
  for (const auto& row : rows) {
    worst = std::min(worst, row.accuracy);
  }
  std::cout << "sweep of " << rows.size() << " samples, worst accuracy "
            << worst << "\n";
  return {"sweep.csv"};
}

// ---------------------------------------------------------------------------
// arar

struct ArarParams {
  std::string checkpoint;  // empty with use_oracle
  bool use_oracle = false;
  std::string ic = "r_pentomino";
  int grid_size = 32;
  int steps = 249;
  double temp = 0.0;
  std::uint64_t seed = 0;
};

void to_json(json& j, const ArarParams& p) {
  j = json{{"checkpoint", p.checkpoint}, {"use_oracle", p.use_oracle},
           {"ic", p.ic},                 {"grid_size", p.grid_size},
           {"steps", p.steps},           {"temp", p.temp},
           {"seed", p.seed}};
}

void from_json(const json& j, ArarParams& p) {
  p.checkpoint = j.value("checkpoint", std::string{});
  p.use_oracle = j.at("use_oracle").get<bool>();
  p.ic = j.at("ic").get<std::string>();
  p.grid_size = j.at("grid_size").get<int>();
  p.steps = j.at("steps").get<int>();
  p.temp = j.at("temp").get<double>();
  p.seed = j.at("seed").get<std::uint64_t>();
}

std::vector<std::string> run_arar(const ArarParams& p, const std::string& out_dir) {
  std::optional<Model<float>> model;
  std::unique_ptr<Predictor> predictor;
  int grid_size = p.grid_size;
  if (p.use_oracle) {
    predictor = std::make_unique<OraclePredictor>();
  } else {
    model.emplace(load_model(p.checkpoint));
    grid_size = grid_size_from_seq(model->cfg.max_seq_len);
    predictor = std::make_unique<ModelPredictor>(*model, p.temp, Rng(p.seed));
  }
  const Grid ic = load_ic(p.ic, grid_size);
  const RolloutTrace trace = arar_rollout(*predictor, ic, p.steps, p.temp);
  export_trace(trace, out_dir);
  if (trace.first_divergence) {
    std::cout << "first divergence at state " << *trace.first_divergence << "\n";
  } else {
    std::cout << "no divergence across " << trace.predicted.size() << " states\n";
  }
  std::vector<std::string> artifacts;
  for (const auto& entry : fs::directory_iterator(out_dir)) {
    const auto name = entry.path().filename().string();
    if (name != "manifest.json") {
      artifacts.push_back(name);
    }
  }
  std::sort(artifacts.begin(), artifacts.end());
  return artifacts;
}

// ---------------------------------------------------------------------------
// oracle

struct OracleParams {
  std::string ic = "blinkers";
  int grid_size = 32;
  int steps = 1;
};

void to_json(json& j, const OracleParams& p) {
  j = json{{"ic", p.ic}, {"grid_size", p.grid_size}, {"steps", p.steps}};
}

void from_json(const json& j, OracleParams& p) {
  p.ic = j.at("ic").get<std::string>();
  p.grid_size = j.at("grid_size").get<int>();
  p.steps = j.at("steps").get<int>();
}

std::vector<std::string> run_oracle(const OracleParams& p, const std::string& out_dir) {
  const Grid ic = load_ic(p.ic, p.grid_size);
  const auto states = rollout(ic, p.steps);
  std::string text;
  for (std::size_t k = 0; k < states.size(); ++k) {
    text += "# state " + std::to_string(k + 1) + "\n";
    text += states[k].to_rows() + "\n\n";
  }
  write_file(out_dir + "/states.txt", text);
  std::cout << states.back().to_rows() << "\n";
  return {"states.txt"};
}

// ---------------------------------------------------------------------------

struct GlobalOptions {
  int threads = 1;
};

std::vector<std::string> dispatch(const std::string& subcommand, const json& config,
                                  const std::string& out_dir, int threads) {
  if (subcommand == "gen") {
    return run_gen(config.get<GenParams>(), out_dir);
  }
  if (subcommand == "train") {
    return run_train(config.get<TrainParams>(), out_dir, threads);
  }
  if (subcommand == "bench") {
    return run_bench(config.get<BenchParams>(), out_dir, threads);
  }
  if (subcommand == "sweep") {
    return run_sweep(config.get<SweepParams>(), out_dir, threads);
  }
  if (subcommand == "arar") {
    return run_arar(config.get<ArarParams>(), out_dir);
  }
  if (subcommand == "oracle") {
    return run_oracle(config.get<OracleParams>(), out_dir);
  }
  throw std::runtime_error("unknown subcommand in manifest: " + subcommand);
}

int run_and_record(const std::string& subcommand, const json& config,
                   const std::string& out, int threads,
                   const std::vector<std::string>& input_paths) {
  const std::string out_dir = resolve_out(out);
  const auto start = Clock::now();
  const auto artifacts = dispatch(subcommand, config, out_dir, threads);
  Manifest manifest;
  manifest.subcommand = subcommand;
  manifest.config = config;
  manifest.threads = threads;
  for (const auto& path : input_paths) {
    manifest.inputs.emplace_back(path, sha256_file(path));
  }
  manifest.duration_seconds =
      std::chrono::duration<double>(Clock::now() - start).count();
  write_manifest(out_dir, std::move(manifest), artifacts);
  std::cout << "manifest: " << out_dir << "/manifest.json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  la::use_single_threaded_blas();
  CLI::App app{"Game-of-Life transformer pipeline"};
  app.require_subcommand(1);
  GlobalOptions global;
  app.add_option("--threads", global.threads, "worker threads (1 = reproducible serial)")
      ->check(CLI::PositiveNumber);

  GenParams gen_params;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen", "generate a dataset");
  gen_cmd->add_option("--n", gen_params.n, "number of records")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--mode", gen_params.mode, "high | broad");
  gen_cmd->add_option("--grid-size", gen_params.grid_size)->check(CLI::Range(3, 1024));
  gen_cmd->add_option("--seed", gen_params.seed);
  gen_cmd->add_option("--out", gen_out, "output directory")->required();

  TrainParams train_params;
  std::string train_out;
  bool desk_scale = false;
  auto* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--data", train_params.data)->required();
  train_cmd->add_option("--val-data", train_params.val_data);
  train_cmd->add_option("--dim", train_params.dim);
  train_cmd->add_option("--depth", train_params.depth);
  train_cmd->add_option("--heads", train_params.heads);
  train_cmd->add_option("--head-dim", train_params.head_dim);
  train_cmd->add_option("--ffn-mult", train_params.ffn_mult);
  train_cmd->add_option("--max-seq-len", train_params.max_seq_len);
  train_cmd->add_option("--batch-size", train_params.batch_size);
  train_cmd->add_option("--grad-accum", train_params.grad_accum);
  train_cmd->add_option("--lr", train_params.learning_rate);
  train_cmd->add_option("--mask-prob", train_params.mask_prob);
  train_cmd->add_option("--epochs", train_params.epochs);
  train_cmd->add_option("--seed", train_params.seed);
  train_cmd->add_option("--checkpoint-every", train_params.checkpoint_every);
  train_cmd->add_option("--target-accuracy", train_params.target_accuracy,
                        "stop once the epoch-end benchmark reaches this accuracy");
  train_cmd->add_option("--testing-seed", train_params.testing_seed);
  train_cmd->add_flag("--desk-scale", desk_scale,
                      "reduced configuration: dim 128, depth 6, heads 4, head_dim 32");
  train_cmd->add_option("--out", train_out)->required();

  BenchParams bench_params;
  std::string bench_out, bench_temps;
  auto* bench_cmd = app.add_subcommand("bench", "accuracy benchmark");
  bench_cmd->add_option("--checkpoint", bench_params.checkpoint)->required();
  bench_cmd->add_option("--testing-set", bench_params.testing_set);
  bench_cmd->add_option("--testing-seed", bench_params.testing_seed);
  bench_cmd->add_option("--temps", bench_temps, "comma-separated temperatures");
  bench_cmd->add_option("--seed", bench_params.eval_seed);
  bench_cmd->add_option("--epoch-label", bench_params.epoch_label);
  bench_cmd->add_option("--out", bench_out)->required();

  SweepParams sweep_params;
  std::string sweep_out;
  auto* sweep_cmd = app.add_subcommand("sweep", "order-parameter sweep");
  sweep_cmd->add_option("--checkpoint", sweep_params.checkpoint)->required();
  sweep_cmd->add_option("--n", sweep_params.n);
  sweep_cmd->add_option("--temp", sweep_params.temp);
  sweep_cmd->add_option("--seed", sweep_params.seed);
  sweep_cmd->add_option("--out", sweep_out)->required();

  ArarParams arar_params;
  std::string arar_out;
  auto* arar_cmd = app.add_subcommand("arar", "recursive rollout");
  arar_cmd->add_option("--checkpoint", arar_params.checkpoint);
  arar_cmd->add_flag("--use-oracle", arar_params.use_oracle,
                     "substitute the exact rule for the model");
  arar_cmd->add_option("--ic", arar_params.ic, "pattern name or grid file");
  arar_cmd->add_option("--grid-size", arar_params.grid_size);
  arar_cmd->add_option("--steps", arar_params.steps)->check(CLI::PositiveNumber);
  arar_cmd->add_option("--temp", arar_params.temp);
  arar_cmd->add_option("--seed", arar_params.seed);
  arar_cmd->add_option("--out", arar_out)->required();

  OracleParams oracle_params;
  std::string oracle_out;
  auto* oracle_cmd = app.add_subcommand("oracle", "step a grid with the exact rule");
  oracle_cmd->add_option("--ic", oracle_params.ic, "pattern name or grid file");
  oracle_cmd->add_option("--grid-size", oracle_params.grid_size);
  oracle_cmd->add_option("--steps", oracle_params.steps)->check(CLI::NonNegativeNumber);
  oracle_cmd->add_option("--out", oracle_out)->required();

  std::string replay_manifest, replay_out;
  auto* replay_cmd = app.add_subcommand("replay", "re-run a recorded manifest");
  replay_cmd->add_option("--manifest", replay_manifest)->required();
  replay_cmd->add_option("--out", replay_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_cmd->parsed()) {
      return run_and_record("gen", json(gen_params), gen_out, global.threads, {});
    }
    if (train_cmd->parsed()) {
      if (desk_scale) {
        train_params.dim = 128;
        train_params.depth = 6;
        train_params.heads = 4;
        train_params.head_dim = 32;
      }
      std::vector<std::string> inputs = {train_params.data};
      if (!train_params.val_data.empty()) {
        inputs.push_back(train_params.val_data);
      }
      return run_and_record("train", json(train_params), train_out,
                            global.threads, inputs);
    }
    if (bench_cmd->parsed()) {
      if (!bench_temps.empty()) {
        bench_params.temps.clear();
        std::stringstream ss(bench_temps);
        std::string item;
        while (std::getline(ss, item, ',')) {
          bench_params.temps.push_back(std::stod(item));
        }
      }
      std::vector<std::string> inputs = {bench_params.checkpoint};
      if (!bench_params.testing_set.empty()) {
        inputs.push_back(bench_params.testing_set);
      }
      return run_and_record("bench", json(bench_params), bench_out,
                            global.threads, inputs);
    }
    if (sweep_cmd->parsed()) {
      return run_and_record("sweep", json(sweep_params), sweep_out,
                            global.threads, {sweep_params.checkpoint});
    }
    if (arar_cmd->parsed()) {
      if (!arar_params.use_oracle && arar_params.checkpoint.empty()) {
        throw CLI::ValidationError("arar needs --checkpoint or --use-oracle");
      }
      std::vector<std::string> inputs;
      if (!arar_params.checkpoint.empty()) {
        inputs.push_back(arar_params.checkpoint);
      }
      return run_and_record("arar", json(arar_params), arar_out, global.threads,
                            inputs);
    }
    if (oracle_cmd->parsed()) {
      return run_and_record("oracle", json(oracle_params), oracle_out,
                            global.threads, {});
    }
    if (replay_cmd->parsed()) {
      const json manifest = load_manifest(replay_manifest);
      return run_and_record(manifest.at("subcommand").get<std::string>(),
                            manifest.at("config"), replay_out,
                            manifest.value("threads", 1), {});
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
