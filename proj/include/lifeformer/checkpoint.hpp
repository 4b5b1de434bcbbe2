#pragma once

#include <cstdint>
#include <string>

#include "lifeformer/model.hpp"

namespace lifeformer {

struct CheckpointMeta {
  int epoch = 0;
  std::int64_t step = 0;
  std::uint64_t seed = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::string note;
};

// Checkpoint container, version 1:
//   bytes 0..3   magic "LFCK"
//   bytes 4..7   format version, little-endian u32
//   bytes 8..15  JSON header length, little-endian u64
//   header       UTF-8 JSON: {"config": {...}, "meta": {...},
//                "arrays": [{"name", "dtype", "shape", "offset", "count"}]}
//   payload      raw little-endian float32 arrays, in registry order
// Offsets are relative to the payload start. Save/load round-trips are
// bit-exact.
void save_checkpoint(const std::string& path, const Model<float>& model,
                     const CheckpointMeta& meta);

struct LoadedCheckpoint {
  ModelConfig config;
  CheckpointMeta meta;
  ModelParams<float> params;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

/// Convenience: loads and wraps into a ready-to-run model.
Model<float> load_model(const std::string& path, CheckpointMeta* meta = nullptr);

}  // namespace lifeformer
