// Copyright (c) Ballpark contributors.
// SPDX-License-Identifier: MIT
#pragma once

// Flat key = value configuration files.
//
//   mode = full            # full | C | B | S
//   cap_c = 10
//   cap_b = 5
//   cap_s = 250
//   separation = desirable # desirable | strict
//   alloc_alloc = necessary
//   frame_cap = 0x10000
//   step_budget = 1000000
//   param_regs = rdi, rsi, rdx, rcx, r8, r9
//   seeds = 32

#include <stdexcept>
#include <string>
#include <string_view>

#include "ballpark/absint.hpp"

namespace ballpark {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    AnalysisConfig analysis;
    std::size_t seeds{32};
};

// Applies the settings in `text` on top of `cfg`.
void apply_config(RunConfig& cfg, std::string_view text);
RunConfig load_config(const std::string& path);

} // namespace ballpark
