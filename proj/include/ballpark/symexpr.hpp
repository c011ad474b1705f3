// Copyright (c) Ballpark contributors.
// SPDX-License-Identifier: MIT
#pragma once

// Symbolic expressions over entry-time constants, heap tokens and external
// return values, kept in a sum normal form so that bases can be read off the
// positive addends.

#include <map>
#include <memory>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "ballpark/mir.hpp"

namespace ballpark {

// Leaf tokens. Initial(reg) is the entry value reg_0; Alloc(site) the pointer
// returned by the allocator called at `site`; Fun(name, site) the value
// returned by a pure external; MemInit(label) the entry content of memory.
struct Atom {
    enum class Kind : std::uint8_t { Initial, Alloc, Fun, MemInit };
    Kind kind{Kind::Initial};
    Reg reg{Reg::rax};
    Addr site{0};
    std::string name;

    static Atom initial(Reg r) { return {Kind::Initial, r, 0, {}}; }
    static Atom alloc(Addr site) { return {Kind::Alloc, Reg::rax, site, {}}; }
    static Atom fun(std::string name, Addr site) { return {Kind::Fun, Reg::rax, site, std::move(name)}; }
    static Atom mem_init(std::string label) { return {Kind::MemInit, Reg::rax, 0, std::move(label)}; }

    std::string render() const;
    auto operator<=>(const Atom&) const = default;
};

class SymExpr {
  public:
    enum class Kind : std::uint8_t { Imm, Leaf, StatePart, App, Deref, Sum, Opaque };

    SymExpr() : SymExpr(imm(0)) {}

    static SymExpr imm(Word v);
    static SymExpr leaf(Atom a);
    static SymExpr initial(Reg r) { return leaf(Atom::initial(r)); }
    static SymExpr alloc(Addr site) { return leaf(Atom::alloc(site)); }
    static SymExpr state_part(std::string name);
    static SymExpr deref(SymExpr addr, Word size);
    // Leaves-only stand-in for an expression that grew past the node cap.
    static SymExpr opaque(std::set<Atom> leaves);

    // Canonicalizing constructor: folds immediates, merges sums, scales by
    // immediate multipliers and shifts, drops mov.
    static SymExpr make_app(Operation op, const std::vector<SymExpr>& args);

    Kind kind() const;
    Word imm_value() const;                       // Kind::Imm
    const Atom& atom() const;                     // Kind::Leaf
    Operation op() const;                         // Kind::App
    const std::vector<SymExpr>& args() const;     // App, Deref (addr first)
    const std::map<SymExpr, Word>& terms() const; // Sum
    Word disp() const;                            // Sum (0 otherwise)
    const std::set<Atom>& leaves() const;         // all atoms used, including cancelled ones
    const std::set<Word>& used_imms() const;      // immediate operands, including folded ones
    std::size_t node_count() const;
    const std::string& state_part_name() const;

    // Sum view: terms with non-zero coefficients plus displacement.
    struct SumView {
        std::map<SymExpr, Word> terms;
        Word disp{0};
    };
    SumView as_sum() const;

    std::string render(bool compact = false) const;

    bool operator==(const SymExpr& o) const { return key() == o.key(); }
    std::strong_ordering operator<=>(const SymExpr& o) const { return key() <=> o.key(); }
    const std::string& key() const;

    // Replace by an opaque leaf set when larger than `max_nodes`.
    SymExpr capped(std::size_t max_nodes) const;

  private:
    struct Node;
    explicit SymExpr(std::shared_ptr<const Node> n) : n_(std::move(n)) {}
    static SymExpr from_sum(SumView s);
    static SymExpr with_leaves(SymExpr e, const std::set<Atom>& used, const std::set<Word>& imms);
    std::shared_ptr<const Node> n_;
};

bool is_constant_computation(const SymExpr& e);

struct Base {
    enum class Kind : std::uint8_t { StackPointer, Global, Alloc, Symbol };
    Kind kind{Kind::StackPointer};
    Addr addr{0};  // function entry, global address or allocation site
    std::string name;

    static Base stack_pointer(Addr f) { return {Kind::StackPointer, f, {}}; }
    static Base global(Addr a) { return {Kind::Global, a, {}}; }
    static Base alloc(Addr site) { return {Kind::Alloc, site, {}}; }
    static Base symbol(std::string n) { return {Kind::Symbol, 0, std::move(n)}; }

    std::string render() const;
    auto operator<=>(const Base&) const = default;
};

struct Source {
    enum class Kind : std::uint8_t { Constant, BaseSrc, Fun };
    Kind kind{Kind::Constant};
    Atom constant;  // Initial or MemInit
    Base base;
    std::string fun;

    static Source constant_src(Atom a) { return {Kind::Constant, std::move(a), {}, {}}; }
    static Source base_src(Base b) { return {Kind::BaseSrc, {}, std::move(b), {}}; }
    static Source fun_src(std::string f) { return {Kind::Fun, {}, {}, std::move(f)}; }

    std::string render() const;
    auto operator<=>(const Source&) const = default;
};

// What base/source extraction needs to know about the surroundings.
struct Context {
    const Program* program{nullptr};
    Addr function{0};
};

std::set<Base> bases_of(const SymExpr& e, const Context& ctx);
std::set<Source> sources_of(const SymExpr& e, const Context& ctx);

// Evaluate a constant computation (or any expression whose leaves are bound).
struct Env {
    std::map<Atom, Word> values;
};
std::optional<Word> evaluate(const SymExpr& e, const Env& env);

} // namespace ballpark
