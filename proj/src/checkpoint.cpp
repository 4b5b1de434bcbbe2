#include "lifeformer/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace lifeformer {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'L', 'F', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

json config_to_json(const ModelConfig& cfg) {
  return json{{"vocab", cfg.vocab},
              {"max_seq_len", cfg.max_seq_len},
              {"dim", cfg.dim},
              {"depth", cfg.depth},
              {"heads", cfg.heads},
              {"head_dim", cfg.head_dim},
              {"ffn_mult", cfg.ffn_mult},
              {"rope_base", cfg.rope_base}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig cfg;
  cfg.vocab = j.at("vocab").get<int>();
  cfg.max_seq_len = j.at("max_seq_len").get<int>();
  cfg.dim = j.at("dim").get<int>();
  cfg.depth = j.at("depth").get<int>();
  cfg.heads = j.at("heads").get<int>();
  cfg.head_dim = j.at("head_dim").get<int>();
  cfg.ffn_mult = j.at("ffn_mult").get<int>();
  cfg.rope_base = j.at("rope_base").get<double>();
  cfg.validate();
  return cfg;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model<float>& model,
                     const CheckpointMeta& meta) {
  auto params = const_cast<ModelParams<float>&>(model.params).arrays();
  json arrays = json::array();
  std::uint64_t offset = 0;
  for (const auto& arr : params) {
    arrays.push_back({{"name", arr.name},
                      {"dtype", "f32"},
                      {"shape", {arr.rows, arr.cols}},
                      {"offset", offset},
                      {"count", arr.data->size()}});
    offset += arr.data->size() * sizeof(float);
  }
  json header = {{"config", config_to_json(model.cfg)},
                 {"meta",
                  {{"epoch", meta.epoch},
                   {"step", meta.step},
                   {"seed", meta.seed},
                   {"train_loss", meta.train_loss},
                   {"val_loss", meta.val_loss},
                   {"note", meta.note}}},
                 {"arrays", std::move(arrays)}};
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open checkpoint for writing: " + path);
  }
  out.write(kMagic, 4);
  const std::uint32_t version = kVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const std::uint64_t header_len = header_text.size();
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const auto& arr : params) {
    out.write(reinterpret_cast<const char*>(arr.data->data()),
              static_cast<std::streamsize>(arr.data->size() * sizeof(float)));
  }
  out.flush();
  if (!out) {
    throw std::runtime_error("failed writing checkpoint: " + path);
  }
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open checkpoint: " + path);
  }
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (!in || version != kVersion) {
    throw std::runtime_error("unsupported checkpoint version in " + path);
  }
  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(header_len));
  if (!in) {
    throw std::runtime_error("truncated checkpoint header: " + path);
  }
  const json header = json::parse(header_text);

  LoadedCheckpoint loaded;
  loaded.config = config_from_json(header.at("config"));
  const json& meta = header.at("meta");
  loaded.meta.epoch = meta.at("epoch").get<int>();
  loaded.meta.step = meta.at("step").get<std::int64_t>();
  loaded.meta.seed = meta.at("seed").get<std::uint64_t>();
  loaded.meta.train_loss = meta.at("train_loss").get<double>();
  loaded.meta.val_loss = meta.at("val_loss").get<double>();
  loaded.meta.note = meta.at("note").get<std::string>();

  loaded.params.allocate(loaded.config);
  auto arrays = loaded.params.arrays();
  const json& dir = header.at("arrays");
  if (dir.size() != arrays.size()) {
    throw std::runtime_error("checkpoint array directory mismatch: " + path);
  }
  for (std::size_t i = 0; i < arrays.size(); ++i) {
    const json& entry = dir[i];
    if (entry.at("name").get<std::string>() != arrays[i].name ||
        entry.at("dtype").get<std::string>() != "f32" ||
        entry.at("count").get<std::uint64_t>() != arrays[i].data->size()) {
      throw std::runtime_error("checkpoint array mismatch at " + arrays[i].name);
    }
    in.read(reinterpret_cast<char*>(arrays[i].data->data()),
            static_cast<std::streamsize>(arrays[i].data->size() * sizeof(float)));
  }
  if (!in) {
    throw std::runtime_error("truncated checkpoint payload: " + path);
  }
  if (!loaded.params.all_finite()) {
    throw std::runtime_error("checkpoint contains non-finite parameters: " + path);
  }
  return loaded;
}

Model<float> load_model(const std::string& path, CheckpointMeta* meta) {
  LoadedCheckpoint loaded = load_checkpoint(path);
  Model<float> model(loaded.config);
  model.params = std::move(loaded.params);
  if (meta != nullptr) {
    *meta = loaded.meta;
  }
  return model;
}

}  // namespace lifeformer
