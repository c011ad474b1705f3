// Copyright (c) Ballpark contributors.
// SPDX-License-Identifier: MIT
#pragma once

// Deterministic random program generator for differential testing.

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace ballpark {

struct GeneratedProgram {
    std::string name;
    std::string text;                // parses with parse_program; entry "main"
    std::set<std::string> features;  // buckets exercised
};

// Every bucket the generator can exercise.
const std::vector<std::string>& feature_buckets();

GeneratedProgram generate_program(std::uint64_t seed, std::size_t index);
std::vector<GeneratedProgram> generate_corpus(std::size_t count, std::uint64_t seed);

} // namespace ballpark
