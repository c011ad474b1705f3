// Copyright (c) Ballpark contributors.
// SPDX-License-Identifier: MIT
#pragma once

// Layered abstract pointers: constant computations (C), bases (B), sources
// (S) and Top, with the separation / enclosure / aliasing algebra.

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ballpark/symexpr.hpp"

namespace ballpark {

enum class Verdict : std::uint8_t { Unknown = 0, Desirable = 1, Necessary = 2 };
std::string_view verdict_name(Verdict v);
inline Verdict weakest(Verdict a, Verdict b) { return a < b ? a : b; }

enum class Layer : std::uint8_t { C = 0, B = 1, S = 2, Top = 3 };
enum class DomainMode : std::uint8_t { Full, OnlyC, OnlyB, OnlyS };
std::string_view mode_name(DomainMode m);
std::optional<DomainMode> mode_from_name(std::string_view s);

class AbsPtr {
  public:
    AbsPtr() = default;  // Top
    static AbsPtr top() { return {}; }
    static AbsPtr c(std::set<SymExpr> elems);
    static AbsPtr b(std::set<Base> elems);
    static AbsPtr s(std::set<Source> elems);

    Layer layer() const { return layer_; }
    bool is_top() const { return layer_ == Layer::Top; }
    const std::set<SymExpr>& c_set() const { return c_; }
    const std::set<Base>& b_set() const { return b_; }
    const std::set<Source>& s_set() const { return s_; }
    std::size_t size() const;

    std::string render() const;
    bool operator==(const AbsPtr&) const = default;
    auto operator<=>(const AbsPtr& o) const { return render() <=> o.render(); }

  private:
    Layer layer_{Layer::Top};
    std::set<SymExpr> c_;
    std::set<Base> b_;
    std::set<Source> s_;
};

struct AbsRegion {
    AbsPtr addr;
    std::optional<Word> size;

    std::string render() const;
    bool operator==(const AbsRegion&) const = default;
};

// Optional external decision procedure for constant-computation
// disjointness; returns nullopt when it has no answer.
using DisjointSolver = std::function<std::optional<bool>(const SymExpr&, Word, const SymExpr&, Word)>;

struct DomainConfig {
    std::size_t cap_c{10};
    std::size_t cap_b{5};
    std::size_t cap_s{250};
    DomainMode mode{DomainMode::Full};
    Verdict alloc_alloc{Verdict::Necessary};
    DisjointSolver solver;
};

class Domain {
  public:
    Domain(DomainConfig cfg, Context ctx);

    const DomainConfig& config() const { return cfg_; }
    const Context& context() const { return ctx_; }

    AbsPtr top() const { return AbsPtr::top(); }
    AbsPtr from_initial(Reg r) const;
    AbsPtr from_immediate(Word v) const;
    AbsPtr from_alloc(Addr site) const;
    AbsPtr from_fun(const std::string& name) const;
    AbsPtr from_mem_init(const std::string& label) const;
    AbsPtr from_expr(const SymExpr& e) const;

    // One descent step C -> B|S -> S -> Top.
    AbsPtr shift(const AbsPtr& p) const;
    // Apply caps and the mode restriction.
    AbsPtr normalize(AbsPtr p) const;

    AbsPtr join(const AbsPtr& a, const AbsPtr& b) const;
    AbsPtr asem(Operation op, const std::vector<AbsPtr>& args) const;

    bool disjoint_cc(const SymExpr& c0, Word si0, const SymExpr& c1, Word si1) const;
    Verdict sep_bases(const Base& b0, const Base& b1) const;
    Verdict sep_sources(const Source& s0, const Source& s1) const;
    Verdict sep(const AbsRegion& r0, const AbsRegion& r1) const;
    bool encl(const AbsRegion& inner, const AbsRegion& outer) const;
    bool alias(const AbsRegion& r0, const AbsRegion& r1) const;

    // Shift the finer of the two until both share a layer.
    std::pair<AbsPtr, AbsPtr> equalize(AbsPtr a, AbsPtr b) const;

  private:
    Verdict sep_same_layer(const AbsPtr& a, const AbsPtr& b) const;
    bool current_site(Addr id) const { return current_.contains(id); }

    DomainConfig cfg_;
    Context ctx_;
    std::set<Addr> current_;
};

// {L,G,H} classes an abstract pointer may designate. Stack offsets within
// [-frame_cap, 0] of rsp_0 are local; anything else stack-relative may reach
// a caller frame.
inline constexpr Word kDefaultFrameCap = 0x10000;
ClassSet designate(const AbsPtr& p, const Context& ctx, Word frame_cap = kDefaultFrameCap);
std::string render_classes(const ClassSet& c);

} // namespace ballpark
