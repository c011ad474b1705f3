// Copyright (c) Ballpark contributors.
// SPDX-License-Identifier: MIT
#pragma once

// Abstract states with region-partitioned memory and the worklist fixpoint.

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ballpark/domain.hpp"

namespace ballpark {

struct MemEntry {
    AbsRegion region;
    AbsPtr value;
    bool operator==(const MemEntry&) const = default;
};

// A desirable separation the analysis relied on while writing.
struct Assumption {
    Addr insn{0};
    std::string region_a;
    std::string region_b;
    auto operator<=>(const Assumption&) const = default;
};

struct AbsState {
    std::array<AbsPtr, kNumRegs> regs{};
    std::map<std::string, AbsPtr> flags;  // absent means Top
    std::vector<MemEntry> mem;            // sorted by rendered region
    std::set<Assumption> assumptions;

    AbsPtr& reg(Reg r) { return regs[static_cast<std::size_t>(r)]; }
    const AbsPtr& reg(Reg r) const { return regs[static_cast<std::size_t>(r)]; }
    const MemEntry* find(const std::string& rendered_region) const;

    // Canonical rendering, assumptions excluded.
    std::string render() const;
    bool same(const AbsState& o) const;
};

enum class SeparationMode : std::uint8_t { AssumeDesirable, Strict };

struct AnalysisConfig {
    DomainConfig domain;
    SeparationMode separation{SeparationMode::AssumeDesirable};
    std::size_t step_budget{1000000};
    ExternModel internal_calls{ExternModel::default_havoc()};
    std::vector<Reg> param_regs{Reg::rdi, Reg::rsi, Reg::rdx, Reg::rcx, Reg::r8, Reg::r9};
    std::vector<Reg> callee_saved{Reg::rbx, Reg::rbp, Reg::r12, Reg::r13, Reg::r14, Reg::r15};
    Word frame_cap{kDefaultFrameCap};
    // Memory known at entry (for example, derived from a caller's state).
    std::vector<MemEntry> pre_memory;
};

// One abstract memory write reached by the analysis.
struct AbsWrite {
    Addr insn{0};
    std::size_t micro{0};
    AbsRegion region;
    AbsPtr value;
    bool assumed{false};  // relied on a desirable separation
};

struct AnalysisResult {
    Addr entry{0};
    std::map<Addr, AbsState> phi;  // state before executing each address
    std::optional<AbsState> post;  // join over states reaching a Ret
    std::set<Addr> unresolved;
    std::set<Assumption> assumptions;
    std::map<Addr, std::set<Addr>> edges;  // resolved indirections
    std::vector<AbsWrite> writes;
    std::map<Addr, AbsState> before_terminator;  // state after each body
    bool budget_exceeded{false};
    std::size_t visits{0};
};

class Analyzer {
  public:
    Analyzer(const Program& p, Addr entry, AnalysisConfig cfg);

    const Domain& domain() const { return dom_; }
    const AnalysisConfig& config() const { return cfg_; }

    AbsState initial_state() const;

    // Memory primitives. `read` records a fresh region when nothing overlaps.
    AbsPtr read(AbsState& s, const AbsRegion& r) const;
    AbsPtr peek(const AbsState& s, const AbsRegion& r) const;  // non-recording
    void write(AbsState& s, const AbsRegion& r, AbsPtr v, Addr insn, bool* assumed = nullptr) const;
    AbsState join(const AbsState& a, const AbsState& b) const;

    struct Edge {
        Addr target;
        AbsState state;
    };
    struct StepOutcome {
        std::vector<Edge> next;
        AbsState after_body;
        bool returns{false};
        bool unresolved{false};
        std::set<Addr> resolved;
        std::vector<AbsWrite> writes;
    };
    StepOutcome step(const AbsState& s, Addr a) const;

    // Classify a register or memory operand as a set of instruction addresses.
    std::optional<std::set<Addr>> resolve_indirect(AbsState& s, const Operand& target, Addr insn) const;

    AnalysisResult run() const;

    AbsRegion region_of(AbsState& s, const MemRef& m, Addr insn) const;

  private:
    bool counts_as_overlap(Verdict v) const;
    AbsPtr eval(AbsState& s, const Operand& o, Addr insn) const;
    void assign(AbsState& s, const Operand& dst, AbsPtr v, Addr insn, std::size_t micro,
                std::vector<AbsWrite>& writes) const;
    void call_effect(AbsState& s, const ExternModel& m, const std::string& name, Addr insn, std::size_t micro,
                     std::vector<AbsWrite>& writes) const;
    AbsRegion canonical(AbsRegion r) const;
    // Entry-time content of memory not written yet.
    AbsPtr fresh_content() const { return dom_.from_mem_init(""); }

    const Program& p_;
    Addr entry_;
    AnalysisConfig cfg_;
    Domain dom_;
};

AnalysisResult analyze(const Program& p, const std::string& entry, const AnalysisConfig& cfg = {});

// Caller-independent memory (constant global regions holding constant
// values) at a call site, usable as a callee's pre-state.
std::vector<MemEntry> call_context(const AnalysisResult& caller, Addr call_site);

} // namespace ballpark
