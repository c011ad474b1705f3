// Copyright (c) Ballpark contributors.
// SPDX-License-Identifier: MIT

#include "ballpark/concrete.hpp"

#include <algorithm>
#include <sstream>

namespace ballpark {

Word splitmix64(Word x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Word seed_word(Addr addr, Word size, Word seed) {
    const Word h = splitmix64(addr ^ splitmix64(size ^ splitmix64(seed)));
    return kCallerHeapBase + (h & 0xfffff) * 8;
}

namespace {

Word byte_mask(Word size) { return size >= 8 ? ~Word{0} : (Word{1} << (8 * size)) - 1; }

// Bytes [off, off+size) of a little-endian word.
Word extract(Word w, Word off, Word size) { return off >= 8 ? 0 : (w >> (8 * off)) & byte_mask(size); }

SymExpr extract_shadow(const SymExpr& sh, Word off, Word size) {
    SymExpr e = sh;
    if (off != 0) e = SymExpr::make_app(Operation::shr, {e, SymExpr::imm(8 * off)});
    if (size < 8) e = SymExpr::make_app(Operation::zext, {e, SymExpr::imm(8 * size)});
    return e.capped(kShadowCap);
}

Cell piece(const Cell& c, Addr lo, Addr hi) {
    Cell out{lo, hi - lo, CVal::top(), SymExpr::imm(0)};
    if (!c.val.is_top() && c.size <= 8) {
        out.val = CVal::of(extract(*c.val.word, lo - c.lo, hi - lo));
        out.shadow = extract_shadow(c.shadow, lo - c.lo, hi - lo);
    }
    return out;
}

} // namespace

std::vector<Addr> CMem::overlapping(Addr a, Word size) const {
    std::vector<Addr> out;
    auto it = cells_.lower_bound(a);
    if (it != cells_.begin()) {
        auto prev = std::prev(it);
        if (prev->second.hi() > a) out.push_back(prev->first);
    }
    for (; it != cells_.end() && it->first < a + size; ++it) out.push_back(it->first);
    return out;
}

CMem::ReadResult CMem::read(Addr a, Word size, Word seed) {
    const auto hits = overlapping(a, size);
    if (hits.empty()) {
        return {CVal::of(seed_word(a, size, seed)),
                SymExpr::leaf(Atom::mem_init("[" + hex(a) + "," + std::to_string(size) + "]"))};
    }
    if (hits.size() == 1) {
        const Cell& c = cells_.at(hits[0]);
        if (c.lo <= a && a + size <= c.hi()) {
            if (c.lo == a && c.size == size) return {c.val, c.shadow};
            const Cell p = piece(c, a, a + size);
            return {p.val, p.shadow};
        }
    }
    bool enclosing = true;
    for (Addr lo : hits) {
        const Cell& c = cells_.at(lo);
        enclosing = enclosing && a <= c.lo && c.hi() <= a + size;
    }
    if (!enclosing) {
        for (Addr lo : hits) {
            Cell& c = cells_.at(lo);
            if (!(a <= c.lo && c.hi() <= a + size)) c.val = CVal::top();
        }
    }
    return {CVal::top(), SymExpr::imm(0)};
}

void CMem::write(Addr a, Word size, CVal v, SymExpr shadow) {
    const auto hits = overlapping(a, size);
    if (hits.size() == 1) {
        const Cell c = cells_.at(hits[0]);
        if (c.lo < a || a + size < c.hi()) {
            if (c.lo <= a && a + size <= c.hi()) {
                cells_.erase(c.lo);
                if (c.lo < a) cells_[c.lo] = piece(c, c.lo, a);
                if (a + size < c.hi()) cells_[a + size] = piece(c, a + size, c.hi());
                cells_[a] = Cell{a, size, v, std::move(shadow)};
                return;
            }
        }
    }
    Addr lo = a;
    Addr hi = a + size;
    bool partial = false;
    for (Addr h : hits) {
        const Cell& c = cells_.at(h);
        if (c.lo < a || c.hi() > a + size) partial = true;
        lo = std::min(lo, c.lo);
        hi = std::max(hi, c.hi());
    }
    for (Addr h : hits) cells_.erase(h);
    if (partial) cells_[lo] = Cell{lo, hi - lo, CVal::top(), SymExpr::imm(0)};
    else cells_[a] = Cell{a, size, v, std::move(shadow)};
}

bool CMem::well_formed() const {
    Addr end = 0;
    bool first = true;
    for (const auto& [lo, c] : cells_) {
        if (c.size == 0 || lo != c.lo) return false;
        if (!first && lo < end) return false;
        end = c.hi();
        first = false;
    }
    return true;
}

CState initial_state(const Program& p, Addr entry, Word seed) {
    CState s;
    s.rip = entry;
    s.seed = seed;
    s.function = entry;
    for (Reg r : kAllRegs) {
        const Word h = splitmix64(seed * 0x100 + static_cast<Word>(r) + 1);
        s.reg(r) = CVal::of(kCallerHeapBase + (h & 0xfffff) * 8);
        s.shadow(r) = SymExpr::initial(r);
    }
    s.rsp0 = kStackBase + (splitmix64(seed) & 0xfff) * 0x10;
    s.reg(Reg::rsp) = CVal::of(s.rsp0);
    s.alloc_cursor = kAllocBase;
    (void)p;
    return s;
}

MemClass classify(const Program& p, Word rsp0, Addr a) {
    if (rsp0 - kLocalWindow <= a && a <= rsp0) return MemClass::L;
    if (p.section_of(a) != nullptr || p.symbol_at(a) != nullptr) return MemClass::G;
    return MemClass::H;
}

namespace {

struct Fault {
    std::string reason;
};

struct Value {
    CVal val;
    SymExpr shadow;
};

class Stepper {
  public:
    Stepper(const Program& p, CState& s, const WriteObserver& obs) : p_(p), s_(s), obs_(obs) {}

    StepResult run() {
        try {
            const Node& n = p_.at(s_.rip);
            insn_ = s_.rip;
            for (std::size_t i = 0; i < n.body.size(); ++i) {
                micro_ = i;
                exec(n.body[i]);
            }
            micro_ = n.body.size();
            return terminate(n);
        } catch (const Fault& f) {
            return {StepResult::Status::Fault, f.reason};
        }
    }

  private:
    Addr address(const AddrExpr& e) {
        Word a = e.disp;
        SymExpr sh = SymExpr::imm(e.disp);
        for (const auto& t : e.terms) {
            const Value v = read_reg(t.reg);
            if (v.val.is_top()) throw Fault{"tainted address at " + hex(insn_)};
            a += t.coeff * *v.val.word;
            sh = SymExpr::make_app(Operation::add,
                                   {sh, SymExpr::make_app(Operation::mul, {v.shadow, SymExpr::imm(t.coeff)})});
        }
        last_addr_shadow_ = sh.capped(kShadowCap);
        return a;
    }

    Value read_reg(const RegRef& r) {
        Value v{s_.reg(r.reg), s_.shadow(r.reg)};
        if (r.low32) {
            if (!v.val.is_top()) v.val = CVal::of(*v.val.word & 0xffffffffULL);
            v.shadow = SymExpr::make_app(Operation::zext, {v.shadow, SymExpr::imm(32)}).capped(kShadowCap);
        }
        return v;
    }

    Value read_flag(const std::string& name) {
        auto it = s_.flags.find(name);
        if (it != s_.flags.end()) return {it->second, SymExpr::state_part(name)};
        Word h = s_.seed;
        for (char c : name) h = splitmix64(h ^ static_cast<unsigned char>(c));
        return {CVal::of(h & 1), SymExpr::state_part(name)};
    }

    Value eval(const Operand& o) {
        if (const auto* i = std::get_if<Imm>(&o)) return {CVal::of(i->value), SymExpr::imm(i->value)};
        if (const auto* r = std::get_if<RegRef>(&o)) return read_reg(*r);
        if (const auto* f = std::get_if<FlagRef>(&o)) return read_flag(f->name);
        const auto& m = std::get<MemRef>(o);
        const Addr a = address(m.addr);
        auto rr = s_.mem.read(a, m.size, s_.seed);
        return {rr.val, rr.shadow};
    }

    void record(Addr a, Word size) {
        if (!obs_) return;
        obs_(WriteRecord{insn_, micro_, s_.function, a, size, classify(p_, s_.rsp0, a), last_addr_shadow_});
    }

    void assign(const Operand& dst, Value v) {
        if (const auto* r = std::get_if<RegRef>(&dst)) {
            if (r->low32) {
                if (!v.val.is_top()) v.val = CVal::of(*v.val.word & 0xffffffffULL);
                v.shadow = SymExpr::make_app(Operation::zext, {v.shadow, SymExpr::imm(32)}).capped(kShadowCap);
            }
            s_.reg(r->reg) = v.val;
            s_.shadow(r->reg) = v.shadow;
        } else if (const auto* f = std::get_if<FlagRef>(&dst)) {
            s_.flags[f->name] = v.val;
        } else if (const auto* m = std::get_if<MemRef>(&dst)) {
            const Addr a = address(m->addr);
            Word size = m->size;
            if (!v.val.is_top()) v.val = CVal::of(*v.val.word & byte_mask(size));
            s_.mem.write(a, size, v.val, v.shadow);
            record(a, size);
        }
    }

    void exec(const MicroInstruction& mi) {
        std::vector<Word> words;
        std::vector<SymExpr> shadows;
        bool top = false;
        for (const auto& in : mi.ins) {
            const Value v = eval(in);
            top = top || v.val.is_top();
            if (!top) words.push_back(*v.val.word);
            shadows.push_back(v.shadow);
        }
        Value out{CVal::top(), SymExpr::make_app(mi.op, shadows).capped(kShadowCap)};
        if (!top) out.val = CVal::of(apply_op(mi.op, words));
        assign(mi.dst, std::move(out));
    }

    Word fresh(Word salt) { return splitmix64(s_.seed ^ splitmix64(insn_ ^ splitmix64(salt + (++calls_)))); }

    void call_extern(const std::string& name, const ExternModel& m, Addr ret) {
        switch (m.kind) {
        case ExternModel::Kind::Allocator: {
            const Addr a = s_.alloc_cursor;
            s_.alloc_cursor += kAllocChunk;
            s_.allocations[insn_].push_back(a);
            s_.reg(Reg::rax) = CVal::of(a);
            s_.shadow(Reg::rax) = SymExpr::alloc(insn_);
            break;
        }
        case ExternModel::Kind::PureReturn:
            s_.reg(Reg::rax) = CVal::of(fresh(1) & 0xff);
            s_.shadow(Reg::rax) = SymExpr::leaf(Atom::fun(name, insn_));
            break;
        case ExternModel::Kind::Havoc: {
            static constexpr std::array<Reg, 6> params{Reg::rdi, Reg::rsi, Reg::rdx, Reg::rcx, Reg::r8, Reg::r9};
            for (Reg r : params) {
                const CVal v = s_.reg(r);
                if (v.is_top()) continue;
                if (!m.may_write.contains(classify(p_, s_.rsp0, *v.word))) continue;
                last_addr_shadow_ = s_.shadow(r);
                s_.mem.write(*v.word, 8, CVal::top(), SymExpr::imm(0));
                record(*v.word, 8);
            }
            for (Reg r : m.clobbers) {
                s_.reg(r) = CVal::of(seed_word(insn_, static_cast<Word>(r), fresh(2)));
                s_.shadow(r) = SymExpr::leaf(Atom::fun(name, insn_));
            }
            break;
        }
        case ExternModel::Kind::Exit: break;
        }
        s_.rip = ret;
    }

    void call_internal(Addr target, Addr ret) {
        const CVal sp = s_.reg(Reg::rsp);
        if (sp.is_top()) throw Fault{"tainted stack pointer at " + hex(insn_)};
        const Word nsp = *sp.word - 8;
        s_.mem.write(nsp, 8, CVal::of(ret), SymExpr::imm(ret));
        s_.callstack.push_back(Frame{ret, s_.function, s_.rsp0});
        s_.reg(Reg::rsp) = CVal::of(nsp);
        s_.shadow(Reg::rsp) = SymExpr::make_app(Operation::sub, {s_.shadow(Reg::rsp), SymExpr::imm(8)});
        s_.function = target;
        s_.rsp0 = nsp;
        s_.rip = target;
    }

    Addr control_target(const Operand& o) {
        const Value v = eval(o);
        if (v.val.is_top()) throw Fault{"tainted control flow at " + hex(insn_)};
        if (!p_.contains(*v.val.word)) throw Fault{"indirect target " + hex(*v.val.word) + " outside program"};
        return *v.val.word;
    }

    StepResult terminate(const Node& n) {
        using S = StepResult::Status;
        if (const auto* j = std::get_if<Jmp>(&n.term)) {
            s_.rip = j->target;
        } else if (const auto* c = std::get_if<CJmp>(&n.term)) {
            const Value f = read_flag(c->flag);
            if (f.val.is_top()) throw Fault{"tainted control flow at " + hex(insn_)};
            s_.rip = *f.val.word != 0 ? c->then_target : c->else_target;
        } else if (const auto* call = std::get_if<Call>(&n.term)) {
            if (const auto* name = std::get_if<std::string>(&call->target)) {
                const ExternModel& m = p_.externs.at(*name);
                if (m.kind == ExternModel::Kind::Exit) return {S::Exited, {}};
                call_extern(*name, m, call->ret);
            } else {
                call_internal(std::get<Addr>(call->target), call->ret);
            }
        } else if (const auto* ic = std::get_if<ICall>(&n.term)) {
            call_internal(control_target(ic->target), ic->ret);
        } else if (const auto* ij = std::get_if<IJmp>(&n.term)) {
            s_.rip = control_target(ij->target);
        } else if (std::holds_alternative<Ret>(n.term)) {
            if (s_.callstack.empty()) return {S::Returned, {}};
            const Frame f = s_.callstack.back();
            s_.callstack.pop_back();
            const CVal sp = s_.reg(Reg::rsp);
            if (!sp.is_top()) s_.reg(Reg::rsp) = CVal::of(*sp.word + 8);
            s_.shadow(Reg::rsp) = SymExpr::make_app(Operation::add, {s_.shadow(Reg::rsp), SymExpr::imm(8)});
            s_.function = f.function;
            s_.rsp0 = f.rsp0;
            s_.rip = f.ret;
        } else {
            return {S::Exited, {}};
        }
        return {S::Running, {}};
    }

    const Program& p_;
    CState& s_;
    const WriteObserver& obs_;
    Addr insn_{0};
    std::size_t micro_{0};
    std::size_t calls_{0};
    SymExpr last_addr_shadow_;
};

} // namespace

StepResult concrete_step(const Program& p, CState& s, const WriteObserver& on_write) {
    if (!p.contains(s.rip)) return {StepResult::Status::Fault, "rip " + hex(s.rip) + " outside program"};
    return Stepper(p, s, on_write).run();
}

ExecutionTrace run_concrete(const Program& p, const std::string& entry, Word seed, const RunOptions& opts) {
    ExecutionTrace t;
    CState s = initial_state(p, p.entry(entry), seed);
    t.initial = s;
    const WriteObserver obs = [&t](const WriteRecord& w) { t.writes.push_back(w); };
    while (true) {
        if (t.steps >= opts.step_budget) {
            t.outcome = ExecutionTrace::Outcome::BudgetExceeded;
            break;
        }
        if (opts.record_states) t.block_entries.push_back(s);
        ++t.steps;
        const StepResult r = concrete_step(p, s, obs);
        if (r.status == StepResult::Status::Running) continue;
        if (r.status == StepResult::Status::Returned) t.outcome = ExecutionTrace::Outcome::Returned;
        if (r.status == StepResult::Status::Exited) t.outcome = ExecutionTrace::Outcome::Exited;
        if (r.status == StepResult::Status::Fault) {
            t.outcome = ExecutionTrace::Outcome::Fault;
            t.reason = r.reason;
        }
        break;
    }
    t.allocations = s.allocations;
    return t;
}

std::string trace_jsonl(const ExecutionTrace& t) {
    std::ostringstream os;
    for (const auto& w : t.writes) {
        os << R"({"addr": ")" << hex(w.insn) << R"(", "write_addr": ")" << hex(w.write_addr) << R"(", "size": )"
           << w.size << R"(, "class": ")" << class_letter(w.cls) << "\"}\n";
    }
    return os.str();
}

} // namespace ballpark
