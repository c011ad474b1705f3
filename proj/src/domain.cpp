// Copyright (c) Ballpark contributors.
// SPDX-License-Identifier: MIT

#include "ballpark/domain.hpp"

namespace ballpark {

std::string_view verdict_name(Verdict v) {
    switch (v) {
    case Verdict::Unknown: return "unknown";
    case Verdict::Desirable: return "desirable";
    case Verdict::Necessary: return "necessary";
    }
    return "?";
}

std::string_view mode_name(DomainMode m) {
    switch (m) {
    case DomainMode::Full: return "full";
    case DomainMode::OnlyC: return "C";
    case DomainMode::OnlyB: return "B";
    case DomainMode::OnlyS: return "S";
    }
    return "?";
}

std::optional<DomainMode> mode_from_name(std::string_view s) {
    if (s == "full") return DomainMode::Full;
    if (s == "C" || s == "onlyC") return DomainMode::OnlyC;
    if (s == "B" || s == "onlyB") return DomainMode::OnlyB;
    if (s == "S" || s == "onlyS") return DomainMode::OnlyS;
    return std::nullopt;
}

AbsPtr AbsPtr::c(std::set<SymExpr> elems) {
    AbsPtr p;
    if (elems.empty()) return p;
    p.layer_ = Layer::C;
    p.c_ = std::move(elems);
    return p;
}

AbsPtr AbsPtr::b(std::set<Base> elems) {
    AbsPtr p;
    if (elems.empty()) return p;
    p.layer_ = Layer::B;
    p.b_ = std::move(elems);
    return p;
}

AbsPtr AbsPtr::s(std::set<Source> elems) {
    AbsPtr p;
    if (elems.empty()) return p;
    p.layer_ = Layer::S;
    p.s_ = std::move(elems);
    return p;
}

std::size_t AbsPtr::size() const {
    switch (layer_) {
    case Layer::C: return c_.size();
    case Layer::B: return b_.size();
    case Layer::S: return s_.size();
    case Layer::Top: return 0;
    }
    return 0;
}

namespace {

template <typename Set, typename F>
std::string render_set(char tag, const Set& set, F&& f) {
    std::string s(1, tag);
    s += "{";
    bool first = true;
    for (const auto& e : set) {
        s += (first ? "" : ", ") + f(e);
        first = false;
    }
    return s + "}";
}

} // namespace

std::string AbsPtr::render() const {
    switch (layer_) {
    case Layer::C: return render_set('C', c_, [](const SymExpr& e) { return e.render(true); });
    case Layer::B: return render_set('B', b_, [](const Base& b) { return b.render(); });
    case Layer::S: return render_set('S', s_, [](const Source& s) { return s.render(); });
    case Layer::Top: return "TOP";
    }
    return "?";
}

std::string AbsRegion::render() const {
    if (size) return "[" + addr.render() + ", " + std::to_string(*size) + "]";
    return "[" + addr.render() + "]";
}

Domain::Domain(DomainConfig cfg, Context ctx) : cfg_(std::move(cfg)), ctx_(ctx) {
    if (ctx_.program != nullptr && ctx_.program->contains(ctx_.function))
        current_ = reachable_from(*ctx_.program, ctx_.function);
}

AbsPtr Domain::shift(const AbsPtr& p) const {
    switch (p.layer()) {
    case Layer::C: {
        std::set<Base> bases;
        bool all_based = true;
        for (const auto& e : p.c_set()) {
            auto b = bases_of(e, ctx_);
            all_based = all_based && !b.empty();
            bases.insert(b.begin(), b.end());
        }
        if (all_based) return AbsPtr::b(std::move(bases));
        // Based elements contribute their bases, so that going through B
        // or straight to S agrees.
        std::set<Source> sources;
        for (const auto& e : p.c_set()) {
            const auto b = bases_of(e, ctx_);
            if (!b.empty()) {
                for (const auto& x : b) sources.insert(Source::base_src(x));
                continue;
            }
            auto s = sources_of(e, ctx_);
            if (s.empty()) return AbsPtr::top();
            sources.insert(s.begin(), s.end());
        }
        return AbsPtr::s(std::move(sources));
    }
    case Layer::B: {
        std::set<Source> sources;
        for (const auto& b : p.b_set()) sources.insert(Source::base_src(b));
        return AbsPtr::s(std::move(sources));
    }
    default: return AbsPtr::top();
    }
}

AbsPtr Domain::normalize(AbsPtr p) const {
    std::optional<Layer> want;
    switch (cfg_.mode) {
    case DomainMode::OnlyC: want = Layer::C; break;
    case DomainMode::OnlyB: want = Layer::B; break;
    case DomainMode::OnlyS: want = Layer::S; break;
    case DomainMode::Full: break;
    }
    while (true) {
        const bool over = (p.layer() == Layer::C && p.size() > cfg_.cap_c) ||
                          (p.layer() == Layer::B && p.size() > cfg_.cap_b) ||
                          (p.layer() == Layer::S && p.size() > cfg_.cap_s);
        if (over || (want && p.layer() < *want)) {
            p = shift(p);
            continue;
        }
        if (want && p.layer() > *want) return AbsPtr::top();
        return p;
    }
}

AbsPtr Domain::from_initial(Reg r) const { return normalize(AbsPtr::c({SymExpr::initial(r)})); }

AbsPtr Domain::from_immediate(Word v) const {
    const SymExpr e = SymExpr::imm(v);
    if (cfg_.mode != DomainMode::OnlyC) {
        auto b = bases_of(e, ctx_);
        if (!b.empty()) return normalize(AbsPtr::b(std::move(b)));
    }
    return normalize(AbsPtr::c({e}));
}

AbsPtr Domain::from_alloc(Addr site) const { return normalize(AbsPtr::c({SymExpr::alloc(site)})); }

AbsPtr Domain::from_fun(const std::string& name) const { return normalize(AbsPtr::s({Source::fun_src(name)})); }

AbsPtr Domain::from_mem_init(const std::string& label) const {
    return normalize(AbsPtr::s({Source::constant_src(Atom::mem_init(label))}));
}

AbsPtr Domain::from_expr(const SymExpr& e) const {
    if (is_constant_computation(e)) return normalize(AbsPtr::c({e}));
    return normalize(AbsPtr::s(sources_of(e, ctx_)));
}

std::pair<AbsPtr, AbsPtr> Domain::equalize(AbsPtr a, AbsPtr b) const {
    while (a.layer() != b.layer()) {
        if (a.layer() < b.layer()) a = shift(a);
        else b = shift(b);
    }
    return {std::move(a), std::move(b)};
}

AbsPtr Domain::join(const AbsPtr& x, const AbsPtr& y) const {
    if (x.is_top() || y.is_top()) return AbsPtr::top();
    auto [a, b] = equalize(x, y);
    switch (a.layer()) {
    case Layer::C: {
        auto s = a.c_set();
        s.insert(b.c_set().begin(), b.c_set().end());
        return normalize(AbsPtr::c(std::move(s)));
    }
    case Layer::B: {
        auto s = a.b_set();
        s.insert(b.b_set().begin(), b.b_set().end());
        return normalize(AbsPtr::b(std::move(s)));
    }
    case Layer::S: {
        auto s = a.s_set();
        s.insert(b.s_set().begin(), b.s_set().end());
        return normalize(AbsPtr::s(std::move(s)));
    }
    case Layer::Top: break;
    }
    return AbsPtr::top();
}

namespace {

bool mentions_base_material(const AbsPtr& p) {
    switch (p.layer()) {
    case Layer::C:
        for (const auto& e : p.c_set()) {
            for (const auto& a : e.leaves()) {
                if (a.kind == Atom::Kind::Alloc) return true;
                if (a.kind == Atom::Kind::Initial && a.reg == Reg::rsp) return true;
            }
        }
        return false;
    case Layer::B: return true;
    case Layer::S:
        for (const auto& s : p.s_set()) {
            if (s.kind == Source::Kind::BaseSrc) return true;
            if (s.kind == Source::Kind::Constant && s.constant.kind == Atom::Kind::Initial &&
                s.constant.reg == Reg::rsp)
                return true;
        }
        return false;
    case Layer::Top: return true;
    }
    return false;
}

} // namespace

AbsPtr Domain::asem(Operation op, const std::vector<AbsPtr>& args) const {
    if (op == Operation::mov) return args[0];

    bool all_c = true;
    for (const auto& a : args) all_c = all_c && a.layer() == Layer::C;
    if (all_c) {
        std::set<SymExpr> out;
        std::vector<std::vector<SymExpr>> elems;
        for (const auto& a : args) elems.emplace_back(a.c_set().begin(), a.c_set().end());
        std::vector<std::size_t> idx(args.size(), 0);
        while (true) {
            std::vector<SymExpr> pick;
            for (std::size_t i = 0; i < args.size(); ++i) pick.push_back(elems[i][idx[i]]);
            out.insert(SymExpr::make_app(op, pick));
            std::size_t k = 0;
            while (k < idx.size() && ++idx[k] == elems[k].size()) idx[k++] = 0;
            if (k == idx.size()) break;
        }
        return normalize(AbsPtr::c(std::move(out)));
    }

    // Adding an offset to a based pointer keeps its bases.
    if ((op == Operation::add || op == Operation::sub) && args.size() == 2) {
        auto based = [&](const AbsPtr& p) -> std::optional<std::set<Base>> {
            if (p.layer() == Layer::B) return p.b_set();
            if (p.layer() == Layer::C) {
                const AbsPtr s = shift(p);
                if (s.layer() == Layer::B) return s.b_set();
            }
            return std::nullopt;
        };
        const auto b0 = based(args[0]);
        const auto b1 = op == Operation::add ? based(args[1]) : std::nullopt;
        if (b0.has_value() != b1.has_value()) {
            const auto& bases = b0 ? *b0 : *b1;
            const AbsPtr& other = b0 ? args[1] : args[0];
            bool stack = false;
            for (const auto& b : bases) stack = stack || b.kind == Base::Kind::StackPointer;
            // A stack base survives only moving further down by immediates.
            bool downward = other.layer() == Layer::C;
            for (const auto& e : other.c_set()) {
                const bool neg = e.kind() == SymExpr::Kind::Imm && static_cast<std::int64_t>(e.imm_value()) < 0;
                const bool pos = e.kind() == SymExpr::Kind::Imm && !neg;
                downward = downward && (op == Operation::sub ? pos : neg);
            }
            if ((!stack || downward) && !mentions_base_material(other)) return normalize(AbsPtr::b(bases));
        }
    }

    std::set<Source> sources;
    for (const auto& a : args) {
        switch (a.layer()) {
        case Layer::Top: return AbsPtr::top();
        case Layer::C:
            for (const auto& e : a.c_set()) {
                auto s = sources_of(e, ctx_);
                sources.insert(s.begin(), s.end());
            }
            break;
        case Layer::B:
            for (const auto& b : a.b_set()) sources.insert(Source::base_src(b));
            break;
        case Layer::S: sources.insert(a.s_set().begin(), a.s_set().end()); break;
        }
    }
    return normalize(AbsPtr::s(std::move(sources)));
}

bool Domain::disjoint_cc(const SymExpr& c0, Word si0, const SymExpr& c1, Word si1) const {
    const auto s0 = c0.as_sum();
    const auto s1 = c1.as_sum();
    if (s0.terms == s1.terms) {
        // Same symbolic anchor: compare the displacement intervals.
        const auto diff = static_cast<std::int64_t>(s1.disp - s0.disp);
        if (diff >= 0) return static_cast<Word>(diff) >= si0;
        return static_cast<Word>(-diff) >= si1;
    }
    if (cfg_.solver) {
        if (auto r = cfg_.solver(c0, si0, c1, si1)) return *r;
    }
    return false;
}

Verdict Domain::sep_bases(const Base& x, const Base& y) const {
    using K = Base::Kind;
    auto one = [&](const Base& a, const Base& b) -> std::optional<Verdict> {
        if (a.kind == K::StackPointer && (b.kind == K::Alloc || b.kind == K::Global || b.kind == K::Symbol))
            return Verdict::Necessary;
        if (a.kind == K::Global && b.kind == K::Alloc) return Verdict::Necessary;
        if (a.kind == K::Alloc && b.kind == K::Symbol) return Verdict::Necessary;
        if (a.kind == K::Global && b.kind == K::Symbol) return Verdict::Desirable;
        return std::nullopt;
    };
    if (auto v = one(x, y)) return *v;
    if (auto v = one(y, x)) return *v;
    if (x.kind == K::Alloc && y.kind == K::Alloc && x.addr != y.addr) return cfg_.alloc_alloc;
    if (x.kind == K::StackPointer && y.kind == K::StackPointer && x.addr != y.addr) return Verdict::Desirable;
    if (x.kind == K::Global && y.kind == K::Global && ctx_.program != nullptr) {
        const Section* a = ctx_.program->section_of(x.addr);
        const Section* b = ctx_.program->section_of(y.addr);
        if (a != nullptr && b != nullptr && a != b) return Verdict::Desirable;
    }
    return Verdict::Unknown;
}

Verdict Domain::sep_sources(const Source& x, const Source& y) const {
    using K = Source::Kind;
    if (x.kind == K::BaseSrc && y.kind == K::BaseSrc) return sep_bases(x.base, y.base);
    if (x.kind == K::Fun && y.kind == K::Fun && x.fun == y.fun) return Verdict::Unknown;
    if (x.kind == K::Fun || y.kind == K::Fun) return Verdict::Necessary;
    auto one = [&](const Source& c, const Source& b) -> std::optional<Verdict> {
        if (c.kind != K::Constant || b.kind != K::BaseSrc) return std::nullopt;
        if (b.base.kind == Base::Kind::Alloc && current_site(b.base.addr)) return Verdict::Necessary;
        if (b.base.kind == Base::Kind::StackPointer && b.base.addr == ctx_.function) return Verdict::Desirable;
        return std::nullopt;
    };
    if (auto v = one(x, y)) return *v;
    if (auto v = one(y, x)) return *v;
    return Verdict::Unknown;
}

Verdict Domain::sep_same_layer(const AbsPtr& a, const AbsPtr& b) const {
    Verdict v = Verdict::Necessary;
    if (a.layer() == Layer::B) {
        for (const auto& x : a.b_set())
            for (const auto& y : b.b_set()) v = weakest(v, sep_bases(x, y));
        return v;
    }
    if (a.layer() == Layer::S) {
        for (const auto& x : a.s_set())
            for (const auto& y : b.s_set()) v = weakest(v, sep_sources(x, y));
        return v;
    }
    return Verdict::Unknown;
}

Verdict Domain::sep(const AbsRegion& r0, const AbsRegion& r1) const {
    if (r0.addr.is_top() || r1.addr.is_top()) return Verdict::Unknown;
    if (r0.addr.layer() == Layer::C && r1.addr.layer() == Layer::C) {
        Verdict v = Verdict::Necessary;
        for (const auto& c0 : r0.addr.c_set()) {
            for (const auto& c1 : r1.addr.c_set()) {
                if (r0.size && r1.size && disjoint_cc(c0, *r0.size, c1, *r1.size)) continue;
                auto [a, b] = equalize(shift(AbsPtr::c({c0})), shift(AbsPtr::c({c1})));
                v = weakest(v, a.is_top() ? Verdict::Unknown : sep_same_layer(a, b));
                if (v == Verdict::Unknown) return v;
            }
        }
        return v;
    }
    auto [a, b] = equalize(r0.addr, r1.addr);
    if (a.is_top()) return Verdict::Unknown;
    return sep_same_layer(a, b);
}

bool Domain::encl(const AbsRegion& inner, const AbsRegion& outer) const {
    if (outer.addr.is_top()) return !outer.size || (inner.size && *inner.size <= *outer.size);
    if (inner.addr.layer() > outer.addr.layer()) return false;
    if (inner.addr.layer() == Layer::C && outer.addr.layer() == Layer::C) {
        for (const auto& c0 : inner.addr.c_set()) {
            bool found = false;
            for (const auto& c1 : outer.addr.c_set()) {
                if (c0 == c1 && (!outer.size || (inner.size && *inner.size <= *outer.size))) {
                    found = true;
                    break;
                }
                if (!inner.size || !outer.size) continue;
                const auto s0 = c0.as_sum();
                const auto s1 = c1.as_sum();
                if (s0.terms != s1.terms) continue;
                const auto off = static_cast<std::int64_t>(s0.disp - s1.disp);
                if (off >= 0 && static_cast<Word>(off) + *inner.size <= *outer.size) {
                    found = true;
                    break;
                }
            }
            if (!found) return false;
        }
        return true;
    }
    AbsPtr a = inner.addr;
    while (a.layer() < outer.addr.layer()) a = shift(a);
    if (a.is_top()) return false;
    if (!(!outer.size || (inner.size && *inner.size == *outer.size))) return false;
    switch (a.layer()) {
    case Layer::B:
        for (const auto& x : a.b_set())
            if (!outer.addr.b_set().contains(x)) return false;
        return true;
    case Layer::S:
        for (const auto& x : a.s_set())
            if (!outer.addr.s_set().contains(x)) return false;
        return true;
    default: return false;
    }
}

bool Domain::alias(const AbsRegion& r0, const AbsRegion& r1) const {
    return r0.addr.layer() == Layer::C && r1.addr.layer() == Layer::C && r0.addr.size() == 1 && r0.addr == r1.addr &&
           r0.size && r1.size && *r0.size == *r1.size;
}

ClassSet designate(const AbsPtr& p, const Context& ctx, Word frame_cap) {
    ClassSet out;
    const Atom rsp0 = Atom::initial(Reg::rsp);
    auto base_classes = [&](const Base& b) {
        switch (b.kind) {
        case Base::Kind::StackPointer: out.insert(MemClass::L); break;
        case Base::Kind::Global:
        case Base::Kind::Symbol: out.insert(MemClass::G); break;
        case Base::Kind::Alloc: out.insert(MemClass::H); break;
        }
    };
    switch (p.layer()) {
    case Layer::Top: return {MemClass::L, MemClass::G, MemClass::H};
    case Layer::C:
        for (const auto& e : p.c_set()) {
            const auto s = e.as_sum();
            const SymExpr sp = SymExpr::initial(Reg::rsp);
            if (s.terms.size() == 1 && s.terms.begin()->first == sp && s.terms.begin()->second == 1) {
                const auto d = static_cast<std::int64_t>(s.disp);
                if (d <= 0 && static_cast<Word>(-d) <= frame_cap) out.insert(MemClass::L);
                else out.insert({MemClass::L, MemClass::H});
                continue;
            }
            if (e.leaves().contains(rsp0)) {
                out.insert({MemClass::L, MemClass::H});
                continue;
            }
            if (e.kind() == SymExpr::Kind::Imm) {
                const Word v = e.imm_value();
                const bool global = ctx.program != nullptr &&
                                    (ctx.program->section_of(v) != nullptr || ctx.program->symbol_at(v) != nullptr);
                out.insert(global ? MemClass::G : MemClass::H);
                continue;
            }
            bool any = false;
            for (const auto& b : bases_of(e, ctx)) {
                base_classes(b);
                any = true;
            }
            if (!any) out.insert(MemClass::H);
        }
        return out;
    case Layer::B:
        for (const auto& b : p.b_set()) base_classes(b);
        return out;
    case Layer::S:
        for (const auto& s : p.s_set()) {
            if (s.kind == Source::Kind::BaseSrc && s.base.kind == Base::Kind::StackPointer) {
                out.insert({MemClass::L, MemClass::H});
            } else if (s.kind == Source::Kind::Constant && s.constant == rsp0) {
                out.insert({MemClass::L, MemClass::H});
            } else if (s.kind == Source::Kind::BaseSrc &&
                       (s.base.kind == Base::Kind::Global || s.base.kind == Base::Kind::Symbol)) {
                out.insert(MemClass::G);
            } else {
                out.insert(MemClass::H);
            }
        }
        return out;
    }
    return out;
}

std::string render_classes(const ClassSet& c) {
    std::string s;
    for (auto x : c) s += class_letter(x);
    return s;
}

} // namespace ballpark
