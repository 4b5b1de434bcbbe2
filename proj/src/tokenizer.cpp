#include "lifeformer/tokenizer.hpp"

#include <stdexcept>

namespace lifeformer {

TokenSequence encode(std::string_view text) {
  TokenSequence ids;
  ids.reserve(text.size());
  for (unsigned char byte : text) {
    ids.push_back(static_cast<int>(byte));
  }
  return ids;
}

std::string decode(std::span<const int> ids) {
  std::string text;
  text.reserve(ids.size());
  for (int id : ids) {
    if (id < 0 || id >= kNumTokens) {
      throw std::invalid_argument("token id out of range: " + std::to_string(id));
    }
    text.push_back(static_cast<char>(static_cast<unsigned char>(id)));
  }
  return text;
}

}  // namespace lifeformer
