// Copyright (c) Ballpark contributors.
// SPDX-License-Identifier: MIT

#include "ballpark/gamma.hpp"

namespace ballpark {

GammaEnv gamma_env(const ExecutionTrace& t) {
    GammaEnv env;
    for (Reg r : kAllRegs) {
        if (const auto& v = t.initial.reg(r); !v.is_top()) env.values[Atom::initial(r)] = {*v.word};
    }
    for (const auto& [site, vals] : t.allocations) env.values[Atom::alloc(site)] = vals;
    return env;
}

namespace {

bool same_global(const Base& abstract, const Base& concrete, const Context& ctx) {
    if (abstract.kind != concrete.kind) return false;
    if (abstract.kind == Base::Kind::Global) {
        if (abstract.addr == concrete.addr) return true;
        if (ctx.program == nullptr) return false;
        const Section* a = ctx.program->section_of(abstract.addr);
        return a != nullptr && a == ctx.program->section_of(concrete.addr);
    }
    if (abstract.kind == Base::Kind::StackPointer) return true;
    return abstract == concrete;
}

} // namespace

bool is_base_of(const Base& b, const SymExpr& e, const Context& ctx) {
    for (const auto& c : bases_of(e, ctx)) {
        if (same_global(b, c, ctx)) return true;
    }
    return false;
}

bool is_src_of(const Source& s, const SymExpr& e, const Context& ctx) {
    switch (s.kind) {
    case Source::Kind::Constant:
        for (const auto& a : e.leaves()) {
            if (a == s.constant) return true;
            if (a.kind == Atom::Kind::MemInit && s.constant.kind == Atom::Kind::MemInit) return true;
        }
        return false;
    case Source::Kind::Fun:
        for (const auto& a : e.leaves()) {
            if (a.kind == Atom::Kind::Fun && a.name == s.fun) return true;
        }
        return false;
    case Source::Kind::BaseSrc:
        switch (s.base.kind) {
        case Base::Kind::StackPointer: return e.leaves().contains(Atom::initial(Reg::rsp));
        case Base::Kind::Alloc: return e.leaves().contains(Atom::alloc(s.base.addr));
        default: return is_base_of(s.base, e, ctx);
        }
    }
    return false;
}

bool evaluates_to(const SymExpr& c, Word value, const GammaEnv& env) {
    std::vector<Atom> atoms(c.leaves().begin(), c.leaves().end());
    std::vector<const std::vector<Word>*> choices;
    for (const auto& a : atoms) {
        auto it = env.values.find(a);
        if (it == env.values.end() || it->second.empty()) return false;
        choices.push_back(&it->second);
    }
    std::vector<std::size_t> idx(atoms.size(), 0);
    for (std::size_t tries = 0; tries < 4096; ++tries) {
        Env e;
        for (std::size_t i = 0; i < atoms.size(); ++i) e.values[atoms[i]] = (*choices[i])[idx[i]];
        if (auto v = evaluate(c, e); v && *v == value) return true;
        std::size_t k = 0;
        while (k < idx.size() && ++idx[k] == choices[k]->size()) idx[k++] = 0;
        if (k == idx.size()) return false;
    }
    return false;
}

bool in_gamma(const AbsPtr& p, Word value, const SymExpr& shadow, const GammaEnv& env, const Context& ctx) {
    switch (p.layer()) {
    case Layer::Top: return true;
    case Layer::C:
        for (const auto& c : p.c_set()) {
            if (c == shadow || evaluates_to(c, value, env)) return true;
        }
        return false;
    case Layer::B:
        for (const auto& b : p.b_set()) {
            if (is_base_of(b, shadow, ctx)) return true;
        }
        return false;
    case Layer::S:
        for (const auto& s : p.s_set()) {
            if (is_src_of(s, shadow, ctx)) return true;
        }
        return false;
    }
    return false;
}

} // namespace ballpark
