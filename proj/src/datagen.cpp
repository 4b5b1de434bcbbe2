#include "lifeformer/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "lifeformer/life.hpp"
#include "lifeformer/patterns.hpp"

namespace lifeformer {

using nlohmann::json;

double order_param(const Grid& g) {
  const double cells = static_cast<double>(g.size()) * g.size();
  return g.live_count() / cells;
}

double shannon_entropy(const Grid& g) {
  // Canonicalize on the smaller integer count so a grid and its complement
  // run through bit-identical arithmetic.
  const int cells = g.size() * g.size();
  const int minority = std::min(g.live_count(), cells - g.live_count());
  if (minority == 0) {
    return 0.0;
  }
  const double p = static_cast<double>(minority) / cells;
  const double q = 1.0 - p;
  return -p * std::log2(p) - q * std::log2(q);
}

std::string flatten(const Grid& g) {
  const int s = g.size();
  std::string out;
  out.reserve(static_cast<std::size_t>(s) * s);
  for (int r = 0; r < s; ++r) {
    for (int c = 0; c < s; ++c) {
      out.push_back(g.at(r, c) ? '1' : '0');
    }
  }
  return out;
}

Grid unflatten(int grid_size, const std::string& cells) {
  if (static_cast<int>(cells.size()) != grid_size * grid_size) {
    throw std::invalid_argument("flattened grid has wrong length");
  }
  Grid g(grid_size);
  for (int r = 0; r < grid_size; ++r) {
    for (int c = 0; c < grid_size; ++c) {
      const char ch = cells[static_cast<std::size_t>(r) * grid_size + c];
      if (ch != '0' && ch != '1') {
        throw std::invalid_argument("flattened grid must be 0/1 characters");
      }
      g.set(r, c, ch == '1' ? 1 : 0);
    }
  }
  return g;
}

int prompt_length(int grid_size) { return 2 * grid_size * grid_size + 23; }

std::string prompt_prefix(const Grid& ic) {
  return "@PredictNextState<" + flatten(ic) + "> [";
}

GameRecord make_record(const Grid& ic) {
  GameRecord rec{ic, step(ic), {}, order_param(ic)};
  rec.prompt_text = prompt_prefix(rec.ic) + flatten(rec.ngs) + "]$";
  return rec;
}

Grid gen_high_entropy_ic(int grid_size, Rng& rng) {
  return gen_ic_with_eta(grid_size, 0.5, rng);
}

Grid gen_ic_with_eta(int grid_size, double eta, Rng& rng) {
  Grid g(grid_size);
  for (int r = 0; r < grid_size; ++r) {
    for (int c = 0; c < grid_size; ++c) {
      g.set(r, c, rng.uniform01() < eta ? 1 : 0);
    }
  }
  return g;
}

std::vector<Grid> gen_broad_entropy_set(int n, int grid_size, const Rng& rng) {
  if (n < 1) {
    throw std::invalid_argument("broad-entropy set needs n >= 1");
  }
  std::vector<Grid> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double eta = n == 1 ? 0.5 : static_cast<double>(k) / (n - 1);
    Rng sub = rng.derive(static_cast<std::uint64_t>(k));
    out.push_back(gen_ic_with_eta(grid_size, eta, sub));
  }
  return out;
}

std::vector<GameRecord> generate_records(const DatasetSpec& spec) {
  if (spec.n_samples < 1) {
    throw std::invalid_argument("dataset needs n_samples >= 1");
  }
  const Rng base(spec.seed);
  std::vector<GameRecord> records;
  records.reserve(static_cast<std::size_t>(spec.n_samples));
  for (int k = 0; k < spec.n_samples; ++k) {
    double eta = 0.5;
    if (spec.mode == DatasetMode::broad_entropy && spec.n_samples > 1) {
      eta = static_cast<double>(k) / (spec.n_samples - 1);
    }
    Rng sub = base.derive(static_cast<std::uint64_t>(k));
    GameRecord rec = make_record(gen_ic_with_eta(spec.grid_size, eta, sub));
    rec.index = k;
    rec.eta_target = eta;
    records.push_back(std::move(rec));
  }
  return records;
}

EtaHistogram eta_histogram(const std::vector<GameRecord>& records, int bins) {
  EtaHistogram hist;
  hist.bins = bins;
  hist.counts.assign(static_cast<std::size_t>(bins), 0);
  for (const auto& rec : records) {
    int bin = static_cast<int>(rec.eta_measured * bins);
    if (bin >= bins) {
      bin = bins - 1;  // eta == 1 goes into the top bin
    }
    ++hist.counts[static_cast<std::size_t>(bin)];
  }
  return hist;
}

DatasetSummary build_datasets(const DatasetSpec& spec, const std::string& out_path) {
  const auto records = generate_records(spec);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open dataset output: " + out_path);
  }
  double eta_sum = 0.0;
  for (const auto& rec : records) {
    json line = {{"index", rec.index},
                 {"eta_target", rec.eta_target},
                 {"ic", flatten(rec.ic)},
                 {"ngs", flatten(rec.ngs)}};
    out << line.dump() << '\n';
    eta_sum += rec.eta_measured;
  }
  out.flush();
  if (!out) {
    throw std::runtime_error("failed writing dataset: " + out_path);
  }
  DatasetSummary summary;
  summary.n_samples = spec.n_samples;
  summary.mean_eta = eta_sum / spec.n_samples;
  summary.histogram = eta_histogram(records, 10);
  return summary;
}

std::vector<GameRecord> load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open dataset: " + path);
  }
  std::vector<GameRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    const json j = json::parse(line);
    const std::string ic_str = j.at("ic").get<std::string>();
    const int side = static_cast<int>(std::lround(std::sqrt(ic_str.size())));
    GameRecord rec = make_record(unflatten(side, ic_str));
    if (flatten(rec.ngs) != j.at("ngs").get<std::string>()) {
      throw std::runtime_error("dataset record " + std::to_string(records.size()) +
                               " has an inconsistent next state");
    }
    rec.index = j.at("index").get<int>();
    rec.eta_target = j.at("eta_target").get<double>();
    records.push_back(std::move(rec));
  }
  return records;
}

void write_histogram_csv(const EtaHistogram& hist, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open histogram output: " + path);
  }
  out << "bin_low,bin_high,count\n";
  for (int k = 0; k < hist.bins; ++k) {
    std::ostringstream row;
    row << static_cast<double>(k) / hist.bins << ','
        << static_cast<double>(k + 1) / hist.bins << ','
        << hist.counts[static_cast<std::size_t>(k)] << '\n';
    out << row.str();
  }
}

int count_shared_ics(const std::vector<GameRecord>& a,
                     const std::vector<GameRecord>& b) {
  std::unordered_set<std::string> seen;
  for (const auto& rec : a) {
    const int live = rec.ic.live_count();
    if (live == 0 || live == rec.ic.size() * rec.ic.size()) {
      continue;
    }
    seen.insert(flatten(rec.ic));
  }
  int shared = 0;
  for (const auto& rec : b) {
    const int live = rec.ic.live_count();
    if (live == 0 || live == rec.ic.size() * rec.ic.size()) {
      continue;
    }
    if (seen.count(flatten(rec.ic)) != 0) {
      ++shared;
    }
  }
  return shared;
}

TestingSet build_testing_set(int grid_size, std::uint64_t seed) {
  const Rng base(seed);
  TestingSet set;
  set.grid_size = grid_size;
  const double targets[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  int sample_index = 0;
  for (double eta : targets) {
    Rng sub = base.derive(static_cast<std::uint64_t>(sample_index));
    TestingSample sample;
    std::ostringstream name;
    name << "eta_" << eta;
    sample.name = name.str();
    sample.eta_target = eta;
    sample.states = rollout(gen_ic_with_eta(grid_size, eta, sub), 9);
    set.samples.push_back(std::move(sample));
    ++sample_index;
  }
  for (const auto& def : named_patterns()) {
    TestingSample sample;
    if (def.height() <= grid_size && def.width() <= grid_size) {
      sample.name = def.name;
      sample.states = rollout(place_centered(def, grid_size), 9);
    } else {
      // Grid too small for this drawing; keep the set at 10 samples.
      Rng sub = base.derive(static_cast<std::uint64_t>(sample_index));
      sample.name = "eta_0.5_for_" + def.name;
      sample.eta_target = 0.5;
      sample.states = rollout(gen_ic_with_eta(grid_size, 0.5, sub), 9);
    }
    set.samples.push_back(std::move(sample));
    ++sample_index;
  }
  return set;
}

void save_testing_set(const TestingSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open testing set output: " + path);
  }
  for (const auto& sample : set.samples) {
    json line = {{"name", sample.name}, {"grid_size", set.grid_size}};
    if (sample.eta_target) {
      line["eta_target"] = *sample.eta_target;
    }
    json states = json::array();
    for (const auto& g : sample.states) {
      states.push_back(flatten(g));
    }
    line["states"] = std::move(states);
    out << line.dump() << '\n';
  }
  if (!out) {
    throw std::runtime_error("failed writing testing set: " + path);
  }
}

TestingSet load_testing_set(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open testing set: " + path);
  }
  TestingSet set;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    const json j = json::parse(line);
    TestingSample sample;
    sample.name = j.at("name").get<std::string>();
    if (j.contains("eta_target")) {
      sample.eta_target = j.at("eta_target").get<double>();
    }
    set.grid_size = j.at("grid_size").get<int>();
    for (const auto& s : j.at("states")) {
      sample.states.push_back(unflatten(set.grid_size, s.get<std::string>()));
    }
    set.samples.push_back(std::move(sample));
  }
  return set;
}

}  // namespace lifeformer
