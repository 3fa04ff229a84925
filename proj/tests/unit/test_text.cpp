#include <doctest.h>

#include "anomforge/parallel.hpp"
#include "anomforge/text.hpp"

using namespace anomforge;

TEST_CASE("tokenize lowercases and splits on non-alphanumerics") {
  CHECK(tokenize("The Fire-Hydrant, odd!") == std::vector<std::string>{"the", "fire", "hydrant", "odd"});
  CHECK(tokenize("  ").empty());
  CHECK(tokenize("r2d2") == std::vector<std::string>{"r2d2"});
}

TEST_CASE("contains_token_run needs a contiguous run") {
  const auto hay = tokenize("a fire truck near the hydrant");
  CHECK(contains_token_run(hay, tokenize("fire truck")));
  CHECK_FALSE(contains_token_run(hay, tokenize("fire hydrant")));
  CHECK_FALSE(contains_token_run(hay, {}));
  CHECK_FALSE(contains_token_run({}, tokenize("a")));
}

TEST_CASE("trim and split_lines") {
  CHECK(trim("  x y \t\n") == "x y");
  CHECK(trim("") == "");
  CHECK(split_lines("a\nb\r\nc") == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("fnv1a64 matches the reference vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("mix_seed is deterministic and order-sensitive") {
  CHECK(mix_seed(1, 2) == mix_seed(1, 2));
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
  CHECK(mix_seed(7, 0) != mix_seed(7, 1));
}

TEST_CASE("parallel_map keeps index order for any job count") {
  for (unsigned jobs : {1u, 2u, 8u}) {
    const auto out = parallel_map(100, jobs, [](std::size_t i) { return i * i; });
    REQUIRE(out.size() == 100);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == i * i);
  }
  CHECK(parallel_map(0, 4, [](std::size_t i) { return i; }).empty());
}

TEST_CASE("parallel_map rethrows the lowest failing index") {
  try {
    parallel_map(50, 4, [](std::size_t i) -> int {
      if (i == 30 || i == 7) throw std::runtime_error("fail " + std::to_string(i));
      return 0;
    });
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "fail 7");
  }
}
