// Copyright (c) Ballpark contributors.
// SPDX-License-Identifier: MIT
#pragma once

// Designations, ground-truth metrics, function verdicts, callee-saved
// preservation, suspect calls and the differential soundness check.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ballpark/absint.hpp"
#include "ballpark/concrete.hpp"

#include <json.hpp>

namespace ballpark {

// Keyed by instruction address.
using Designations = std::map<Addr, ClassSet>;

struct WriteReport {
    Addr insn{0};
    std::size_t micro{0};
    std::string region;
    ClassSet designation;
    bool assumed{false};
};

std::vector<WriteReport> write_reports(const AnalysisResult& res, const Context& ctx, Word frame_cap = kDefaultFrameCap);
Designations predicted(const AnalysisResult& res, const Context& ctx, Word frame_cap = kDefaultFrameCap);

struct GroundTruth {
    Designations classes;  // domain is W
    std::size_t runs{0};
    std::size_t faults{0};
    std::string diagnostic;
};

// Writes performed by the entry function itself across all seeds.
GroundTruth ground_truth(const Program& p, const std::string& entry, const std::vector<Word>& seeds);

// Undefined (nullopt) when W is empty.
std::optional<double> recall(const Designations& pa, const Designations& gt);
std::optional<double> precision(const Designations& pa, const Designations& gt);

struct FunctionVerdict {
    enum class Kind { OK, UN, ERR };
    Kind kind{Kind::OK};
    std::optional<Addr> witness;     // ERR: offending write
    std::string witness_region;
    std::set<Addr> unresolved;       // UN
    std::set<Assumption> relied;     // desirable separations counted as separate
};
std::string verdict_name(FunctionVerdict::Kind k);
int exit_code(FunctionVerdict::Kind k);

FunctionVerdict check_function(const Program& p, const AnalysisResult& res, const AnalysisConfig& cfg);

// True per register iff its post value is exactly its initial value; empty
// when no return is reachable.
std::map<Reg, bool> callee_saved_check(const AnalysisResult& res, const Program& p, const AnalysisConfig& cfg);

struct SuspectCall {
    Addr insn{0};
    Reg reg{Reg::rdi};
    std::string pointer;
    bool operator==(const SuspectCall&) const = default;
};
std::vector<SuspectCall> find_suspect_calls(const AnalysisResult& res, const Program& p, const AnalysisConfig& cfg);

// Concrete behaviour outside the abstraction.
struct Violation {
    Word seed{0};
    Addr insn{0};
    std::string what;
};

struct DiffResult {
    GroundTruth gt;
    Designations pa;
    std::optional<double> recall;
    std::optional<double> precision;
    std::vector<Violation> violations;
    std::size_t writes_checked{0};
    std::size_t states_checked{0};
};

DiffResult differential(const Program& p, const std::string& entry, const AnalysisResult& res,
                        const std::vector<Word>& seeds, std::size_t max_violations = 16);

std::string percent(std::optional<double> v);

nlohmann::json report_json(const Program& p, const AnalysisResult& res, const AnalysisConfig& cfg,
                           const std::optional<DiffResult>& diff = std::nullopt);

} // namespace ballpark
