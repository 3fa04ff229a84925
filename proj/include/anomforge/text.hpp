#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace anomforge {

// Lowercases and splits on any run of non-alphanumeric characters.
std::vector<std::string> tokenize(std::string_view text);

// True iff `needle` occurs as a contiguous run inside `haystack`. An empty
// needle never matches.
bool contains_token_run(const std::vector<std::string>& haystack,
                        const std::vector<std::string>& needle);

std::string_view trim(std::string_view text);

std::vector<std::string> split_lines(std::string_view text);

// Stable 64-bit FNV-1a; used wherever a seed must be derived from text, so
// results do not depend on std::hash.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace anomforge
