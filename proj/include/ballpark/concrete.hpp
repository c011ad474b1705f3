// Copyright (c) Ballpark contributors.
// SPDX-License-Identifier: MIT
#pragma once

// Concrete semantics with alignment tracking. Values are 64-bit words or
// Top (tainted); every value also carries a symbolic shadow recording how it
// was computed, which the differential checks compare against the analysis.

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ballpark/mir.hpp"
#include "ballpark/symexpr.hpp"

namespace ballpark {

struct CVal {
    std::optional<Word> word;

    static CVal top() { return {}; }
    static CVal of(Word w) { return {w}; }
    bool is_top() const { return !word.has_value(); }
    bool operator==(const CVal&) const = default;
};

// splitmix64 step, the only source of pseudo-randomness in the oracle.
Word splitmix64(Word x);

// Value returned for a never-written region.
Word seed_word(Addr addr, Word size, Word seed);

struct Cell {
    Addr lo{0};
    Word size{0};
    CVal val;
    SymExpr shadow;
    Addr hi() const { return lo + size; }  // exclusive
};

class CMem {
  public:
    struct ReadResult {
        CVal val;
        SymExpr shadow;
    };

    // Reads may taint partially overlapped cells, hence non-const.
    ReadResult read(Addr a, Word size, Word seed);
    void write(Addr a, Word size, CVal v, SymExpr shadow);

    const std::map<Addr, Cell>& cells() const { return cells_; }
    // Word-addressed cells are pairwise non-overlapping.
    bool well_formed() const;

  private:
    std::vector<Addr> overlapping(Addr a, Word size) const;
    std::map<Addr, Cell> cells_;
};

struct Frame {
    Addr ret{0};
    Addr function{0};
    Word rsp0{0};
};

struct CState {
    Addr rip{0};
    std::array<CVal, kNumRegs> regs{};
    std::array<SymExpr, kNumRegs> shadows{};
    std::map<std::string, CVal> flags;
    CMem mem;
    std::vector<Frame> callstack;
    Addr alloc_cursor{0};
    Word seed{0};
    Addr function{0};  // entry of the currently executing function
    Word rsp0{0};      // rsp when the current function was called
    std::map<Addr, std::vector<Word>> allocations;  // values returned per allocator call site

    CVal& reg(Reg r) { return regs[static_cast<std::size_t>(r)]; }
    const CVal& reg(Reg r) const { return regs[static_cast<std::size_t>(r)]; }
    SymExpr& shadow(Reg r) { return shadows[static_cast<std::size_t>(r)]; }
    const SymExpr& shadow(Reg r) const { return shadows[static_cast<std::size_t>(r)]; }
};

inline constexpr Word kStackBase = 0x7ff000000000;
inline constexpr Word kCallerHeapBase = 0x500000000000;
inline constexpr Word kAllocBase = 0x600000000000;
inline constexpr Word kAllocChunk = 0x1000;
inline constexpr Word kLocalWindow = 0x10000;
inline constexpr std::size_t kShadowCap = 64;

CState initial_state(const Program& p, Addr entry, Word seed);

// Ground-truth class of a written address (rsp0 is the current frame's).
MemClass classify(const Program& p, Word rsp0, Addr a);

struct WriteRecord {
    Addr insn{0};
    std::size_t micro{0};  // index in the body; body.size() for the terminator
    Addr function{0};
    Addr write_addr{0};
    Word size{0};
    MemClass cls{MemClass::H};
    SymExpr addr_shadow;
};

struct StepResult {
    enum class Status { Running, Returned, Exited, Fault };
    Status status{Status::Running};
    std::string reason;
};

using WriteObserver = std::function<void(const WriteRecord&)>;

StepResult concrete_step(const Program& p, CState& s, const WriteObserver& on_write = {});

struct ExecutionTrace {
    enum class Outcome { Returned, Exited, Fault, BudgetExceeded };
    Outcome outcome{Outcome::Returned};
    std::string reason;
    std::vector<WriteRecord> writes;
    std::vector<CState> block_entries;  // filled when requested
    CState initial;
    std::map<Addr, std::vector<Word>> allocations;
    std::size_t steps{0};
};

struct RunOptions {
    std::size_t step_budget{1000000};
    bool record_states{false};
};

ExecutionTrace run_concrete(const Program& p, const std::string& entry, Word seed, const RunOptions& opts = {});

// One JSON object per line, as consumed by external tooling.
std::string trace_jsonl(const ExecutionTrace& t);

} // namespace ballpark
