// Copyright (c) Ballpark contributors.
// SPDX-License-Identifier: MIT
#pragma once

// Executable proof obligations for the abstract-domain contract, checked on
// randomly sampled abstract values and concrete members.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ballpark/domain.hpp"

#include <json.hpp>

namespace ballpark {

// The operations the obligations quantify over.
struct Contract {
    std::function<AbsPtr(const AbsPtr&, const AbsPtr&)> join;
    std::function<AbsPtr(Operation, const std::vector<AbsPtr>&)> asem;
    std::function<Verdict(const AbsRegion&, const AbsRegion&)> sep;
    std::function<bool(const AbsRegion&, const AbsRegion&)> encl;
    std::function<AbsPtr(const SymExpr&)> lift;
};

Contract contract_of(const Domain& d);

// Deliberate defects used to show the kit notices them.
enum class Mutation : std::uint8_t { None, IntersectJoin, NecessarySep };

struct ObligationResult {
    std::string name;
    std::size_t cases{0};
    std::size_t failures{0};
    std::optional<std::string> first_counterexample;
};

struct ObligationReport {
    std::vector<ObligationResult> results;
    std::vector<std::string> exhausted;  // obligations whose sampler ran dry below budget

    bool passed() const;
    const ObligationResult* find(const std::string& name) const;
    void merge(const ObligationReport& o);
    nlohmann::json to_json() const;
};

// Obligation names, in report order.
const std::vector<std::string>& obligation_names();

ObligationReport check_obligations(DomainMode mode, std::size_t budget, std::uint64_t seed = 1,
                                   Mutation mutation = Mutation::None);

} // namespace ballpark
