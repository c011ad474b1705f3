// Copyright (c) Ballpark contributors.
// SPDX-License-Identifier: MIT
#pragma once

// Micro-instruction IR: every address holds a list of `dst := f(in...)`
// micro-instructions followed by exactly one control-flow terminator.

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ballpark {

using Addr = std::uint64_t;
using Word = std::uint64_t;

enum class Reg : std::uint8_t { rax, rbx, rcx, rdx, rsi, rdi, rbp, rsp, r8, r9, r10, r11, r12, r13, r14, r15 };
inline constexpr std::size_t kNumRegs = 16;

inline constexpr std::array<Reg, kNumRegs> kAllRegs{Reg::rax, Reg::rbx, Reg::rcx, Reg::rdx, Reg::rsi, Reg::rdi,
                                                   Reg::rbp, Reg::rsp, Reg::r8,  Reg::r9,  Reg::r10, Reg::r11,
                                                   Reg::r12, Reg::r13, Reg::r14, Reg::r15};

std::string_view reg_name(Reg r);
std::optional<Reg> reg_from_name(std::string_view name);

// A register operand: either the 64-bit register or its 32-bit alias
// (eax, edi, r8d, ...). Writes to the alias zero-extend into the parent.
struct RegRef {
    Reg reg{Reg::rax};
    bool low32{false};

    std::string name() const;
    auto operator<=>(const RegRef&) const = default;
};
std::optional<RegRef> regref_from_name(std::string_view name);

enum class Operation : std::uint8_t {
    add, sub, mul, udiv, and_, or_, xor_, shl, shr, sar, sext, zext, mov, eq, ne, ult, slt
};

std::string_view op_name(Operation op);
std::optional<Operation> op_from_name(std::string_view name);
std::size_t op_arity(Operation op);

// Total semantics on untainted 64-bit words (udiv by zero yields zero,
// shift amounts are taken modulo 64).
Word apply_op(Operation op, const std::vector<Word>& args);

struct AddrTerm {
    Word coeff{1};
    RegRef reg;
    auto operator<=>(const AddrTerm&) const = default;
};

// sum(coeff * reg) + disp, at most two register terms.
struct AddrExpr {
    std::vector<AddrTerm> terms;
    Word disp{0};
    auto operator<=>(const AddrExpr&) const = default;
};

struct Imm {
    Word value{0};
    auto operator<=>(const Imm&) const = default;
};
struct FlagRef {
    std::string name;
    auto operator<=>(const FlagRef&) const = default;
};
struct MemRef {
    AddrExpr addr;
    std::uint8_t size{8};
    auto operator<=>(const MemRef&) const = default;
};

using Operand = std::variant<Imm, RegRef, FlagRef, MemRef>;

std::string render_operand(const Operand& o);

struct MicroInstruction {
    Operand dst;
    Operation op{Operation::mov};
    std::vector<Operand> ins;
    bool operator==(const MicroInstruction&) const = default;
};

struct Jmp {
    Addr target;
    bool operator==(const Jmp&) const = default;
};
struct CJmp {
    std::string flag;
    Addr then_target;
    Addr else_target;
    bool operator==(const CJmp&) const = default;
};
// Direct call: either a declared external (by name) or an internal address.
using CallTarget = std::variant<std::string, Addr>;
struct Call {
    CallTarget target;
    Addr ret;
    bool operator==(const Call&) const = default;
};
struct ICall {
    Operand target;
    Addr ret;
    bool operator==(const ICall&) const = default;
};
struct IJmp {
    Operand target;
    bool operator==(const IJmp&) const = default;
};
struct Ret {
    bool operator==(const Ret&) const = default;
};
struct Exit {
    bool operator==(const Exit&) const = default;
};

using Terminator = std::variant<Jmp, CJmp, Call, ICall, IJmp, Ret, Exit>;

// Designation classes, shared by the oracle and the reports.
enum class MemClass : std::uint8_t { L, G, H };
using ClassSet = std::set<MemClass>;
char class_letter(MemClass c);

struct ExternModel {
    enum class Kind : std::uint8_t { Allocator, PureReturn, Havoc, Exit };
    Kind kind{Kind::PureReturn};
    std::set<Reg> clobbers;  // Havoc only
    ClassSet may_write;      // Havoc only
    bool operator==(const ExternModel&) const = default;

    static ExternModel default_havoc();
};

struct Section {
    Addr lo;
    Addr hi;  // inclusive upper address as written in the source
    std::string name;
    bool contains(Addr a) const { return a >= lo && a <= hi; }
    bool operator==(const Section&) const = default;
};

struct Symbol {
    std::string name;
    Word size{1};
    bool operator==(const Symbol&) const = default;
};

struct Node {
    std::vector<MicroInstruction> body;
    Terminator term;
    bool operator==(const Node&) const = default;
};

struct Program {
    std::map<Addr, Node> nodes;
    std::map<std::string, Addr> entries;
    std::vector<Section> sections;
    std::map<Addr, Symbol> symbols;
    std::map<std::string, ExternModel> externs;

    bool operator==(const Program&) const = default;

    const Node& at(Addr a) const;
    bool contains(Addr a) const { return nodes.contains(a); }
    Addr entry(const std::string& name) const;
    const Section* section_of(Addr a) const;
    const std::string* symbol_at(Addr a) const;  // address within a symbol's extent
    const ExternModel* extern_model(const CallTarget& t) const;
};

class ParseError : public std::runtime_error {
  public:
    ParseError(std::size_t line, std::size_t col, const std::string& msg);
    std::size_t line() const { return line_; }
    std::size_t col() const { return col_; }

  private:
    std::size_t line_;
    std::size_t col_;
};

Program parse_program(std::string_view text);
std::string render_program(const Program& p);

struct Known {
    std::set<Addr> targets;
};
struct NeedsResolution {
    Operand operand;
};
using Successors = std::variant<Known, NeedsResolution>;

Successors successors(const Program& p, Addr a);

// Addresses reachable from `entry` over Known edges (indirections excluded).
std::set<Addr> reachable_from(const Program& p, Addr entry);

std::string hex(Word w);

} // namespace ballpark
