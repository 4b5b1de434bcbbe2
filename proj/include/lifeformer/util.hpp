#pragma once

#include <cstdint>
#include <functional>
#include <string>

namespace lifeformer {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

/// Runs fn(i) for i in [0, n). With threads > 1 the index range is split
/// into contiguous chunks; results must be written to per-index slots so the
/// outcome is independent of the thread count.
void parallel_for(std::int64_t n, int threads,
                  const std::function<void(std::int64_t)>& fn);

}  // namespace lifeformer
