#include "lifeformer/arar.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "lifeformer/datagen.hpp"
#include "lifeformer/life.hpp"
#include "lifeformer/tokenizer.hpp"

namespace lifeformer {

using nlohmann::json;

double error_rate(const Grid& predicted, const Grid& ground_truth) {
  if (predicted.size() != ground_truth.size()) {
    throw std::invalid_argument("error_rate needs equally sized grids");
  }
  const int s = predicted.size();
  int wrong = 0;
  for (int r = 0; r < s; ++r) {
    for (int c = 0; c < s; ++c) {
      if (predicted.at(r, c) != ground_truth.at(r, c)) {
        ++wrong;
      }
    }
  }
  return static_cast<double>(wrong) / (static_cast<double>(s) * s);
}

StepPrediction OraclePredictor::predict_next(const Grid& current) {
  return {step(current), false};
}

ModelPredictor::ModelPredictor(const Model<float>& model, double temperature,
                               Rng rng)
    : model_(&model), temperature_(temperature), rng_(rng) {}

StepPrediction ModelPredictor::predict_next(const Grid& current) {
  const TokenSequence prompt = encode(prompt_prefix(current));
  const int s = current.size();
  const TokenSequence out = generate(*model_, prompt, s * s, temperature_, rng_);
  Grid next(s);
  bool had_invalid = false;
  for (int i = 0; i < s * s; ++i) {
    const int token = out[static_cast<std::size_t>(i)];
    if (token == '1') {
      next.set(i / s, i % s, 1);
    } else {
      if (token != '0') {
        had_invalid = true;
      }
      next.set(i / s, i % s, 0);
    }
  }
  return {next, had_invalid};
}

RolloutTrace arar_rollout(Predictor& predictor, const Grid& ic, int steps,
                          double temperature) {
  if (steps < 1) {
    throw std::invalid_argument("rollout needs steps >= 1");
  }
  RolloutTrace trace;
  trace.ic = ic;
  trace.steps = steps;
  trace.temperature = temperature;
  trace.ground_truth = rollout(ic, steps);
  trace.predicted.reserve(static_cast<std::size_t>(steps) + 1);
  trace.predicted.push_back(ic);
  trace.error_rates.push_back(0.0);
  trace.had_invalid_bytes.push_back(0);
  for (int k = 1; k <= steps; ++k) {
    StepPrediction pred = predictor.predict_next(trace.predicted.back());
    const double err =
        error_rate(pred.grid, trace.ground_truth[static_cast<std::size_t>(k)]);
    if (err > 0.0 && !trace.first_divergence) {
      trace.first_divergence = k + 1;  // 1-based states, IC = state 1
    }
    trace.predicted.push_back(std::move(pred.grid));
    trace.error_rates.push_back(err);
    trace.had_invalid_bytes.push_back(pred.had_invalid_bytes ? 1 : 0);
  }
  return trace;
}

namespace {

void write_pgm(const Grid& g, const std::string& path) {
  const int s = g.size();
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open frame output: " + path);
  }
  out << "P5\n" << s << ' ' << s << "\n255\n";
  std::string bytes(static_cast<std::size_t>(s) * s, '\0');
  for (int r = 0; r < s; ++r) {
    for (int c = 0; c < s; ++c) {
      bytes[static_cast<std::size_t>(r) * s + c] =
          g.at(r, c) ? static_cast<char>(255) : static_cast<char>(0);
    }
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Grid xor_grid(const Grid& a, const Grid& b) {
  Grid out(a.size());
  for (int r = 0; r < a.size(); ++r) {
    for (int c = 0; c < a.size(); ++c) {
      out.set(r, c, a.at(r, c) != b.at(r, c) ? 1 : 0);
    }
  }
  return out;
}

}  // namespace

void export_trace(const RolloutTrace& trace, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream out(out_dir + "/error_rates.csv", std::ios::binary);
    if (!out) {
      throw std::runtime_error("cannot open error_rates.csv in " + out_dir);
    }
    out << "state_index,error_rate,first_divergence\n";
    for (std::size_t k = 0; k < trace.error_rates.size(); ++k) {
      const int state_index = static_cast<int>(k) + 1;
      const bool is_first =
          trace.first_divergence && *trace.first_divergence == state_index;
      out << state_index << ',' << std::setprecision(17)
          << trace.error_rates[k] << ',' << (is_first ? 1 : 0) << '\n';
    }
  }
  {
    std::ofstream out(out_dir + "/trace.jsonl", std::ios::binary);
    if (!out) {
      throw std::runtime_error("cannot open trace.jsonl in " + out_dir);
    }
    for (std::size_t k = 0; k < trace.predicted.size(); ++k) {
      json line = {{"state", static_cast<int>(k) + 1},
                   {"error_rate", trace.error_rates[k]},
                   {"had_invalid_bytes",
                    static_cast<bool>(trace.had_invalid_bytes[k])},
                   {"pred", flatten(trace.predicted[k])},
                   {"gt", flatten(trace.ground_truth[k])}};
      out << line.dump() << '\n';
    }
  }
  for (std::size_t k = 0; k < trace.predicted.size(); ++k) {
    std::ostringstream stem;
    stem << out_dir << "/state_" << std::setfill('0') << std::setw(4)
         << (k + 1);
    write_pgm(trace.ground_truth[k], stem.str() + "_gt.pgm");
    write_pgm(trace.predicted[k], stem.str() + "_pred.pgm");
    write_pgm(xor_grid(trace.ground_truth[k], trace.predicted[k]),
              stem.str() + "_err.pgm");
  }
}

}  // namespace lifeformer
