// Copyright (c) Ballpark contributors.
// SPDX-License-Identifier: MIT
#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "ballpark/mir.hpp"

namespace ballpark::test {

inline std::string corpus_text(const std::string& name) {
    std::ifstream in(std::string(BALLPARK_CORPUS_DIR) + "/" + name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Program corpus(const std::string& name) { return parse_program(corpus_text(name)); }

} // namespace ballpark::test
