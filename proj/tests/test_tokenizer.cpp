#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "lifeformer/datagen.hpp"
#include "lifeformer/rng.hpp"
#include "lifeformer/tokenizer.hpp"

using namespace lifeformer;

TEST_SUITE("tokenizer") {

TEST_CASE("empty text encodes to an empty sequence") {
  CHECK(encode("").empty());
}

TEST_CASE("ascii digits map to their byte values") {
  const TokenSequence ids = encode("01");
  REQUIRE(ids.size() == 2);
  CHECK(ids[0] == 48);
  CHECK(ids[1] == 49);
}

TEST_CASE("frame delimiters are plain bytes") {
  CHECK(decode(std::vector<int>{64}) == "@");
  CHECK(decode(std::vector<int>{36}) == "$");
}

TEST_CASE("a full prompt is one token per byte") {
  Rng rng(1);
  const GameRecord rec = make_record(gen_high_entropy_ic(32, rng));
  REQUIRE(rec.prompt_text.size() == 2071);
  CHECK(encode(rec.prompt_text).size() == 2071);
}

TEST_CASE("round trip over every single byte") {
  for (int b = 0; b < 256; ++b) {
    const std::string text(1, static_cast<char>(static_cast<unsigned char>(b)));
    const TokenSequence ids = encode(text);
    REQUIRE(ids.size() == 1);
    CHECK(ids[0] == b);
    CHECK(decode(ids) == text);
  }
}

TEST_CASE("round trip over random byte strings") {
  Rng rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    std::string text;
    const int len = static_cast<int>(rng.below(64));
    for (int i = 0; i < len; ++i) {
      text.push_back(static_cast<char>(static_cast<unsigned char>(rng.below(256))));
    }
    const TokenSequence ids = encode(text);
    CHECK(ids.size() == text.size());
    CHECK(decode(ids) == text);
  }
}

TEST_CASE("decode rejects out-of-range ids") {
  CHECK_THROWS_AS(decode(std::vector<int>{256}), std::invalid_argument);
  CHECK_THROWS_AS(decode(std::vector<int>{-1}), std::invalid_argument);
}

}  // TEST_SUITE
