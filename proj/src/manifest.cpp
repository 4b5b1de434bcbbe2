#include "lifeformer/manifest.hpp"

#include <fstream>
#include <stdexcept>

#include "lifeformer/util.hpp"

namespace lifeformer {

using nlohmann::json;

void write_manifest(const std::string& out_dir, Manifest manifest,
                    const std::vector<std::string>& relative_artifacts) {
  for (const auto& rel : relative_artifacts) {
    manifest.artifacts.emplace_back(rel, sha256_file(out_dir + "/" + rel));
  }
  json j;
  j["schema"] = 1;
  j["subcommand"] = manifest.subcommand;
  j["config"] = manifest.config;
  j["threads"] = manifest.threads;
  json inputs = json::array();
  for (const auto& [path, digest] : manifest.inputs) {
    inputs.push_back({{"path", path}, {"sha256", digest}});
  }
  j["inputs"] = std::move(inputs);
  json artifacts = json::array();
  for (const auto& [path, digest] : manifest.artifacts) {
    artifacts.push_back({{"path", path}, {"sha256", digest}});
  }
  j["artifacts"] = std::move(artifacts);
  j["duration_seconds"] = manifest.duration_seconds;
  write_file(out_dir + "/manifest.json", j.dump(2) + "\n");
}

json load_manifest(const std::string& path) {
  return json::parse(read_file(path));
}

}  // namespace lifeformer
