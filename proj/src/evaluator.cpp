#include "lifeformer/evaluator.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "lifeformer/life.hpp"
#include "lifeformer/tokenizer.hpp"
#include "lifeformer/util.hpp"

namespace lifeformer {

double accuracy(const std::string& predicted, const std::string& ground_truth) {
  if (predicted.size() != ground_truth.size() || predicted.empty()) {
    throw std::invalid_argument("accuracy needs equal nonempty sequences");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] == ground_truth[i]) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

CellGenerator model_cell_generator(const Model<float>& model) {
  const Model<float>* m = &model;
  return [m](const Grid& ic, double temperature, Rng& rng) {
    const TokenSequence prompt = encode(prompt_prefix(ic));
    const int cells = ic.size() * ic.size();
    const TokenSequence out = generate(*m, prompt, cells, temperature, rng);
    return decode(out);
  };
}

CellGenerator oracle_cell_generator() {
  return [](const Grid& ic, double, Rng&) { return flatten(step(ic)); };
}

std::vector<AccuracyReport> benchmark(const CellGenerator& gen,
                                      const TestingSet& testing_set,
                                      const std::vector<double>& temperatures,
                                      std::uint64_t eval_seed, int epoch,
                                      int threads) {
  if (testing_set.samples.empty()) {
    throw std::invalid_argument("empty testing set");
  }
  const Rng base(eval_seed);
  std::vector<AccuracyReport> reports;
  for (std::size_t ti = 0; ti < temperatures.size(); ++ti) {
    const double temp = temperatures[ti];
    AccuracyReport report;
    report.epoch = epoch;
    report.temperature = temp;
    report.eval_seed = eval_seed;
    report.samples.resize(testing_set.samples.size());
    parallel_for(
        static_cast<std::int64_t>(testing_set.samples.size()), threads,
        [&](std::int64_t si) {
          const auto& sample = testing_set.samples[static_cast<std::size_t>(si)];
          if (sample.states.size() < 2) {
            throw std::invalid_argument("testing sample lacks a next state");
          }
          Rng rng = base.derive(ti * 0x100000000ull +
                                static_cast<std::uint64_t>(si));
          SampleScore score;
          score.name = sample.name;
          score.expected = flatten(sample.states[1]);
          score.predicted = gen(sample.states[0], temp, rng);
          if (score.predicted.size() != score.expected.size()) {
            throw std::runtime_error("generator returned wrong cell count");
          }
          for (std::size_t i = 0; i < score.expected.size(); ++i) {
            if (score.predicted[i] != score.expected[i]) {
              score.mismatch_positions.push_back(static_cast<int>(i));
            }
          }
          score.accuracy = accuracy(score.predicted, score.expected);
          report.samples[static_cast<std::size_t>(si)] = std::move(score);
        });
    std::size_t correct = 0;
    std::size_t total = 0;
    for (const auto& score : report.samples) {
      total += score.expected.size();
      correct += score.expected.size() - score.mismatch_positions.size();
    }
    report.accuracy = static_cast<double>(correct) / static_cast<double>(total);
    reports.push_back(std::move(report));
  }
  return reports;
}

void write_benchmark_csv(const std::vector<AccuracyReport>& reports,
                         const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open report output: " + path);
  }
  out << "epoch,temperature,accuracy\n";
  for (const auto& report : reports) {
    out << report.epoch << ',' << std::setprecision(17) << report.temperature
        << ',' << std::setprecision(17) << report.accuracy << '\n';
  }
}

void write_benchmark_samples_csv(const std::vector<AccuracyReport>& reports,
                                 const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open report output: " + path);
  }
  out << "epoch,temperature,sample,name,accuracy,mismatches\n";
  for (const auto& report : reports) {
    for (std::size_t si = 0; si < report.samples.size(); ++si) {
      const auto& s = report.samples[si];
      out << report.epoch << ',' << std::setprecision(17) << report.temperature
          << ',' << si << ',' << s.name << ',' << std::setprecision(17)
          << s.accuracy << ',' << s.mismatch_positions.size() << '\n';
    }
  }
}

void write_mismatch_maps(const std::vector<AccuracyReport>& reports,
                         const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& report : reports) {
    for (const auto& s : report.samples) {
      if (s.mismatch_positions.empty()) {
        continue;
      }
      std::string map(s.expected.size(), '0');
      for (int pos : s.mismatch_positions) {
        map[static_cast<std::size_t>(pos)] = '1';
      }
      std::ostringstream name;
      name << dir << "/mismatch_t" << report.temperature << '_' << s.name
           << ".txt";
      write_file(name.str(), map + "\n");
    }
  }
}

std::vector<SweepRow> order_param_sweep(const CellGenerator& gen, int grid_size,
                                        int n_samples, double temperature,
                                        std::uint64_t seed, int threads) {
  if (n_samples < 1) {
    throw std::invalid_argument("sweep needs n_samples >= 1");
  }
  const Rng base(seed);
  std::vector<SweepRow> rows(static_cast<std::size_t>(n_samples));
  parallel_for(n_samples, threads, [&](std::int64_t k) {
    const double eta =
        n_samples == 1 ? 0.5 : static_cast<double>(k) / (n_samples - 1);
    Rng ic_rng = base.derive(static_cast<std::uint64_t>(k));
    Rng gen_rng = base.derive(0x53414d50ull * 0x100000000ull +
                              static_cast<std::uint64_t>(k));
    const Grid ic = gen_ic_with_eta(grid_size, eta, ic_rng);
    const std::string expected = flatten(step(ic));
    const std::string predicted = gen(ic, temperature, gen_rng);
    rows[static_cast<std::size_t>(k)] = {eta, order_param(ic),
                                         accuracy(predicted, expected)};
  });
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open sweep output: " + path);
  }
  out << "eta_target,eta_measured,accuracy\n";
  for (const auto& row : rows) {
    out << std::setprecision(17) << row.eta_target << ','
        << std::setprecision(17) << row.eta_measured << ','
        << std::setprecision(17) << row.accuracy << '\n';
  }
}

}  // namespace lifeformer
