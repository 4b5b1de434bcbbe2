#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lifeformer {

// Byte-level tokenization: token ids are exactly the UTF-8 bytes of the
// text. The vocabulary is the 256 raw byte values; '@', '$' and the other
// frame delimiters are ordinary bytes.
inline constexpr int kNumTokens = 256;

using TokenSequence = std::vector<int>;

TokenSequence encode(std::string_view text);

/// Inverse of encode. Throws std::invalid_argument for ids outside [0, 255].
std::string decode(std::span<const int> ids);

}  // namespace lifeformer
