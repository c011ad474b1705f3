// Copyright (c) Ballpark contributors.
// SPDX-License-Identifier: MIT
#pragma once

// Concretization membership: does a concrete value, together with the
// symbolic record of how it was computed, belong to an abstract pointer?

#include <map>
#include <vector>

#include "ballpark/concrete.hpp"
#include "ballpark/domain.hpp"

namespace ballpark {

// Possible concrete values of every leaf token in one run. Allocation sites
// inside loops bind to several values.
struct GammaEnv {
    std::map<Atom, std::vector<Word>> values;
};

GammaEnv gamma_env(const ExecutionTrace& t);

bool is_base_of(const Base& b, const SymExpr& e, const Context& ctx);
bool is_src_of(const Source& s, const SymExpr& e, const Context& ctx);

// Some binding of the leaves makes a C element evaluate to `value`.
bool evaluates_to(const SymExpr& c, Word value, const GammaEnv& env);

bool in_gamma(const AbsPtr& p, Word value, const SymExpr& shadow, const GammaEnv& env, const Context& ctx);

} // namespace ballpark
