// Copyright (c) Ballpark contributors.
// SPDX-License-Identifier: MIT

#include <catch_amalgamated.hpp>

#include "ballpark/config.hpp"

using namespace ballpark;

TEST_CASE("configuration keys") {
    RunConfig cfg;
    apply_config(cfg,
                 "# experiment\n"
                 "mode = B\n"
                 "cap_c = 4\n"
                 "cap_b = 2\n"
                 "cap_s = 9\n"
                 "separation = strict\n"
                 "alloc_alloc = desirable\n"
                 "frame_cap = 0x2000\n"
                 "step_budget = 500\n"
                 "seeds = 12\n"
                 "param_regs = rdi, rsi\n");
    CHECK(cfg.analysis.domain.mode == DomainMode::OnlyB);
    CHECK(cfg.analysis.domain.cap_c == 4);
    CHECK(cfg.analysis.domain.cap_b == 2);
    CHECK(cfg.analysis.domain.cap_s == 9);
    CHECK(cfg.analysis.separation == SeparationMode::Strict);
    CHECK(cfg.analysis.domain.alloc_alloc == Verdict::Desirable);
    CHECK(cfg.analysis.frame_cap == 0x2000);
    CHECK(cfg.analysis.step_budget == 500);
    CHECK(cfg.seeds == 12);
    CHECK(cfg.analysis.param_regs == std::vector<Reg>{Reg::rdi, Reg::rsi});
}

TEST_CASE("configuration errors") {
    RunConfig cfg;
    CHECK_THROWS_AS(apply_config(cfg, "cap_c = 0"), ConfigError);
    CHECK_THROWS_AS(apply_config(cfg, "frame_cap = 0"), ConfigError);
    CHECK_THROWS_AS(apply_config(cfg, "mode = D"), ConfigError);
    CHECK_THROWS_AS(apply_config(cfg, "colour = red"), ConfigError);
    CHECK_THROWS_AS(apply_config(cfg, "cap_c 3"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/ballpark.cfg"), ConfigError);
}
