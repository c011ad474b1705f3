// Copyright (c) Ballpark contributors.
// SPDX-License-Identifier: MIT

#include "ballpark/absint.hpp"

#include <algorithm>

namespace ballpark {

const MemEntry* AbsState::find(const std::string& rendered_region) const {
    for (const auto& e : mem) {
        if (e.region.render() == rendered_region) return &e;
    }
    return nullptr;
}

std::string AbsState::render() const {
    std::string s;
    for (Reg r : kAllRegs) s += std::string(reg_name(r)) + " = " + reg(r).render() + "\n";
    for (const auto& [f, v] : flags) s += f + " = " + v.render() + "\n";
    for (const auto& e : mem) s += e.region.render() + " = " + e.value.render() + "\n";
    return s;
}

bool AbsState::same(const AbsState& o) const { return render() == o.render(); }

namespace {

void sort_mem(std::vector<MemEntry>& mem) {
    std::sort(mem.begin(), mem.end(),
              [](const MemEntry& a, const MemEntry& b) { return a.region.render() < b.region.render(); });
}

AbsPtr raw_imm(Word v) { return AbsPtr::c({SymExpr::imm(v)}); }

} // namespace

Analyzer::Analyzer(const Program& p, Addr entry, AnalysisConfig cfg)
    : p_(p), entry_(entry), cfg_(std::move(cfg)), dom_(cfg_.domain, Context{&p, entry}) {}

AbsState Analyzer::initial_state() const {
    AbsState s;
    for (Reg r : kAllRegs) s.reg(r) = dom_.from_initial(r);
    for (const auto& e : cfg_.pre_memory) write(s, e.region, e.value, 0);
    return s;
}

AbsRegion Analyzer::canonical(AbsRegion r) const {
    if (r.addr.layer() != Layer::C) r.size.reset();
    return r;
}

bool Analyzer::counts_as_overlap(Verdict v) const {
    if (v == Verdict::Necessary) return false;
    if (v == Verdict::Desirable) return cfg_.separation == SeparationMode::Strict;
    return true;
}

AbsPtr Analyzer::peek(const AbsState& s, const AbsRegion& r0) const {
    const AbsRegion r = canonical(r0);
    if (r.addr.is_top()) return AbsPtr::top();
    if (r0.size && *r0.size < 8) return AbsPtr::top();
    for (const auto& e : s.mem) {
        if (dom_.alias(r, e.region)) return e.value;
    }
    std::optional<AbsPtr> acc;
    bool enclosed = false;
    for (const auto& e : s.mem) {
        if (!counts_as_overlap(dom_.sep(r, e.region))) continue;
        acc = acc ? dom_.join(*acc, e.value) : e.value;
        // Only a sized constant region is known to cover every address it
        // names; summaries may leave the read address unwritten.
        const bool exact = e.region.addr.layer() == Layer::C && e.region.size.has_value();
        enclosed = enclosed || (exact && dom_.encl(r, e.region));
    }
    const AbsPtr fresh = fresh_content();
    if (!acc) return fresh;
    return enclosed ? *acc : dom_.join(*acc, fresh);
}

AbsPtr Analyzer::read(AbsState& s, const AbsRegion& r0) const {
    const AbsRegion r = canonical(r0);
    if (r.addr.is_top() || (r0.size && *r0.size < 8)) return AbsPtr::top();
    for (const auto& e : s.mem) {
        if (counts_as_overlap(dom_.sep(r, e.region))) return peek(s, r0);
    }
    const AbsPtr fresh = fresh_content();
    s.mem.push_back({r, fresh});
    sort_mem(s.mem);
    return fresh;
}

void Analyzer::write(AbsState& s, const AbsRegion& r0, AbsPtr v, Addr insn, bool* assumed) const {
    AbsRegion r = canonical(r0);
    if (r0.size && *r0.size < 8) v = AbsPtr::top();
    for (auto& e : s.mem) {
        if (dom_.alias(r, e.region)) {
            e.value = std::move(v);
            return;
        }
    }
    MemEntry merged{r, std::move(v)};
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto it = s.mem.begin(); it != s.mem.end();) {
            const Verdict verdict = dom_.sep(merged.region, it->region);
            if (!counts_as_overlap(verdict)) {
                if (verdict == Verdict::Desirable && insn != 0) {
                    s.assumptions.insert({insn, merged.region.render(), it->region.render()});
                    if (assumed) *assumed = true;
                }
                ++it;
                continue;
            }
            merged.region.addr = dom_.join(merged.region.addr, it->region.addr);
            // The merged region covers both footprints.
            if (merged.region.size != it->region.size || !(merged.region.addr == it->region.addr))
                merged.region.size.reset();
            merged.region = canonical(merged.region);
            merged.value = dom_.join(merged.value, it->value);
            it = s.mem.erase(it);
            changed = true;
        }
    }
    s.mem.push_back(std::move(merged));
    sort_mem(s.mem);
}

AbsState Analyzer::join(const AbsState& a, const AbsState& b) const {
    AbsState out = a;
    for (Reg r : kAllRegs) out.reg(r) = dom_.join(a.reg(r), b.reg(r));
    for (auto it = out.flags.begin(); it != out.flags.end();) {
        auto other = b.flags.find(it->first);
        if (other == b.flags.end() || !(other->second == it->second)) it = out.flags.erase(it);
        else ++it;
    }
    for (const auto& e : b.mem) {
        auto same = std::find_if(out.mem.begin(), out.mem.end(), [&](const MemEntry& o) { return o.region == e.region; });
        if (same != out.mem.end()) same->value = dom_.join(same->value, e.value);
        else write(out, e.region, dom_.join(e.value, peek(out, e.region)), 0);
    }
    // Regions only one side wrote still hold their entry content on the other.
    for (const auto& e : a.mem) {
        bool touched = false;
        for (const auto& f : b.mem) touched = touched || counts_as_overlap(dom_.sep(e.region, f.region));
        if (!touched) write(out, e.region, dom_.join(peek(out, e.region), fresh_content()), 0);
    }
    out.assumptions.insert(b.assumptions.begin(), b.assumptions.end());
    return out;
}

AbsRegion Analyzer::region_of(AbsState& s, const MemRef& m, Addr insn) const {
    std::optional<AbsPtr> acc;
    for (const auto& t : m.addr.terms) {
        AbsPtr v = eval(s, t.reg, insn);
        if (t.coeff != 1) v = dom_.asem(Operation::mul, {v, raw_imm(t.coeff)});
        acc = acc ? dom_.asem(Operation::add, {*acc, v}) : v;
    }
    if (!acc) acc = dom_.normalize(AbsPtr::c({SymExpr::imm(m.addr.disp)}));
    else if (m.addr.disp != 0) acc = dom_.asem(Operation::add, {*acc, raw_imm(m.addr.disp)});
    return canonical(AbsRegion{*acc, m.size});
}

AbsPtr Analyzer::eval(AbsState& s, const Operand& o, Addr insn) const {
    if (const auto* i = std::get_if<Imm>(&o)) return raw_imm(i->value);
    if (const auto* r = std::get_if<RegRef>(&o)) {
        const AbsPtr v = s.reg(r->reg);
        return r->low32 ? dom_.asem(Operation::zext, {v, raw_imm(32)}) : v;
    }
    if (const auto* f = std::get_if<FlagRef>(&o)) {
        auto it = s.flags.find(f->name);
        return it == s.flags.end() ? AbsPtr::top() : it->second;
    }
    return read(s, region_of(s, std::get<MemRef>(o), insn));
}

void Analyzer::assign(AbsState& s, const Operand& dst, AbsPtr v, Addr insn, std::size_t micro,
                      std::vector<AbsWrite>& writes) const {
    if (const auto* r = std::get_if<RegRef>(&dst)) {
        if (r->low32) v = dom_.asem(Operation::zext, {v, raw_imm(32)});
        s.reg(r->reg) = std::move(v);
    } else if (const auto* f = std::get_if<FlagRef>(&dst)) {
        if (v.is_top()) s.flags.erase(f->name);
        else s.flags[f->name] = std::move(v);
    } else if (const auto* m = std::get_if<MemRef>(&dst)) {
        const AbsRegion r = region_of(s, *m, insn);
        bool assumed = false;
        write(s, r, v, insn, &assumed);
        writes.push_back({insn, micro, r, std::move(v), assumed});
    }
}

void Analyzer::call_effect(AbsState& s, const ExternModel& m, const std::string& name, Addr insn,
                           std::size_t micro, std::vector<AbsWrite>& writes) const {
    switch (m.kind) {
    case ExternModel::Kind::Allocator: s.reg(Reg::rax) = dom_.from_alloc(insn); break;
    case ExternModel::Kind::PureReturn: s.reg(Reg::rax) = dom_.from_fun(name); break;
    case ExternModel::Kind::Havoc: {
        for (Reg r : cfg_.param_regs) {
            const ClassSet d = designate(s.reg(r), dom_.context(), cfg_.frame_cap);
            bool hit = false;
            for (auto c : d) hit = hit || m.may_write.contains(c);
            if (!hit) continue;
            const AbsRegion region = canonical(AbsRegion{s.reg(r), 8});
            bool assumed = false;
            write(s, region, AbsPtr::top(), insn, &assumed);
            writes.push_back({insn, micro, region, AbsPtr::top(), assumed});
        }
        for (Reg r : m.clobbers) s.reg(r) = AbsPtr::top();
        break;
    }
    case ExternModel::Kind::Exit: break;
    }
}

std::optional<std::set<Addr>> Analyzer::resolve_indirect(AbsState& s, const Operand& target, Addr insn) const {
    const AbsPtr v = eval(s, target, insn);
    if (v.layer() != Layer::C) return std::nullopt;
    std::set<Addr> out;
    for (const auto& e : v.c_set()) {
        if (e.kind() != SymExpr::Kind::Imm || !p_.contains(e.imm_value())) return std::nullopt;
        out.insert(e.imm_value());
    }
    return out;
}

Analyzer::StepOutcome Analyzer::step(const AbsState& s0, Addr a) const {
    StepOutcome out;
    AbsState s = s0;
    const Node& n = p_.at(a);
    for (std::size_t i = 0; i < n.body.size(); ++i) {
        const MicroInstruction& mi = n.body[i];
        AbsPtr v;
        if (mi.op == Operation::mov) {
            const auto* imm = std::get_if<Imm>(&mi.ins[0]);
            v = imm ? dom_.from_immediate(imm->value) : eval(s, mi.ins[0], a);
        } else {
            std::vector<AbsPtr> args;
            for (const auto& in : mi.ins) args.push_back(eval(s, in, a));
            v = dom_.asem(mi.op, args);
        }
        assign(s, mi.dst, std::move(v), a, i, out.writes);
    }
    const std::size_t term = n.body.size();
    out.after_body = s;

    const auto internal_name = [](Addr t) { return "sub_" + hex(t); };
    if (const auto* j = std::get_if<Jmp>(&n.term)) {
        out.next.push_back({j->target, s});
    } else if (const auto* c = std::get_if<CJmp>(&n.term)) {
        out.next.push_back({c->then_target, s});
        if (c->else_target != c->then_target) out.next.push_back({c->else_target, s});
    } else if (const auto* call = std::get_if<Call>(&n.term)) {
        if (const auto* name = std::get_if<std::string>(&call->target)) {
            const ExternModel& m = p_.externs.at(*name);
            if (m.kind != ExternModel::Kind::Exit) {
                call_effect(s, m, *name, a, term, out.writes);
                out.next.push_back({call->ret, s});
            }
        } else {
            call_effect(s, cfg_.internal_calls, internal_name(std::get<Addr>(call->target)), a, term, out.writes);
            out.next.push_back({call->ret, s});
        }
    } else if (const auto* ic = std::get_if<ICall>(&n.term)) {
        if (auto targets = resolve_indirect(s, ic->target, a)) {
            out.resolved = *targets;
            call_effect(s, cfg_.internal_calls, internal_name(*targets->begin()), a, term, out.writes);
            out.next.push_back({ic->ret, s});
        } else {
            out.unresolved = true;
        }
    } else if (const auto* ij = std::get_if<IJmp>(&n.term)) {
        if (auto targets = resolve_indirect(s, ij->target, a)) {
            out.resolved = *targets;
            for (Addr t : *targets) out.next.push_back({t, s});
        } else {
            out.unresolved = true;
        }
    } else if (std::holds_alternative<Ret>(n.term)) {
        out.returns = true;
    }
    return out;
}

AnalysisResult Analyzer::run() const {
    AnalysisResult res;
    res.entry = entry_;
    res.phi[entry_] = initial_state();
    std::set<Addr> work{entry_};
    while (!work.empty()) {
        if (res.visits >= cfg_.step_budget) {
            res.budget_exceeded = true;
            break;
        }
        const Addr a = *work.begin();
        work.erase(work.begin());
        ++res.visits;
        StepOutcome o = step(res.phi.at(a), a);
        if (o.unresolved) res.unresolved.insert(a);
        if (!o.resolved.empty()) res.edges[a].insert(o.resolved.begin(), o.resolved.end());
        for (auto& e : o.next) {
            auto it = res.phi.find(e.target);
            if (it == res.phi.end()) {
                res.phi.emplace(e.target, std::move(e.state));
                work.insert(e.target);
                continue;
            }
            AbsState j = join(it->second, e.state);
            if (!j.same(it->second)) {
                it->second = std::move(j);
                work.insert(e.target);
            } else {
                it->second.assumptions = std::move(j.assumptions);
            }
        }
    }

    // Replay every reached address once against its final invariant.
    for (const auto& [a, s] : res.phi) {
        StepOutcome o = step(s, a);
        res.writes.insert(res.writes.end(), o.writes.begin(), o.writes.end());
        res.assumptions.insert(o.after_body.assumptions.begin(), o.after_body.assumptions.end());
        for (const auto& e : o.next) res.assumptions.insert(e.state.assumptions.begin(), e.state.assumptions.end());
        if (o.returns) res.post = res.post ? join(*res.post, o.after_body) : o.after_body;
        res.before_terminator.emplace(a, std::move(o.after_body));
    }
    if (res.post) res.post->assumptions.clear();
    return res;
}

AnalysisResult analyze(const Program& p, const std::string& entry, const AnalysisConfig& cfg) {
    return Analyzer(p, p.entry(entry), cfg).run();
}

namespace {

bool caller_independent(const AbsPtr& p) {
    switch (p.layer()) {
    case Layer::C:
        for (const auto& e : p.c_set()) {
            if (!e.leaves().empty() || e.kind() != SymExpr::Kind::Imm) return false;
        }
        return true;
    case Layer::B:
        for (const auto& b : p.b_set()) {
            if (b.kind != Base::Kind::Global && b.kind != Base::Kind::Symbol) return false;
        }
        return true;
    default: return false;
    }
}

} // namespace

std::vector<MemEntry> call_context(const AnalysisResult& caller, Addr call_site) {
    std::vector<MemEntry> out;
    auto it = caller.before_terminator.find(call_site);
    if (it == caller.before_terminator.end()) return out;
    for (const auto& e : it->second.mem) {
        if (caller_independent(e.region.addr) && caller_independent(e.value)) out.push_back(e);
    }
    return out;
}

} // namespace ballpark
