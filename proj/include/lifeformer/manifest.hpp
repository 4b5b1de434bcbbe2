#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace lifeformer {

/// Every CLI run writes exactly one manifest.json next to its artifacts.
/// The resolved config plus the recorded seed values are sufficient to
/// reproduce the run; artifact checksums let a replay be verified
/// bit-for-bit.
struct Manifest {
  std::string subcommand;
  nlohmann::json config;
  int threads = 1;
  std::vector<std::pair<std::string, std::string>> inputs;     // path, sha256
  std::vector<std::pair<std::string, std::string>> artifacts;  // relative path, sha256
  double duration_seconds = 0.0;
};

/// Hashes `relative_artifacts` inside out_dir and writes out_dir/manifest.json.
void write_manifest(const std::string& out_dir, Manifest manifest,
                    const std::vector<std::string>& relative_artifacts);

nlohmann::json load_manifest(const std::string& path);

}  // namespace lifeformer
