// Copyright (c) Ballpark contributors.
// SPDX-License-Identifier: MIT

#include "ballpark/symexpr.hpp"

#include <algorithm>
#include <sstream>

namespace ballpark {

struct SymExpr::Node {
    Kind kind{Kind::Imm};
    Word value{0};
    Atom atom;
    Operation op{Operation::mov};
    std::vector<SymExpr> args;
    std::map<SymExpr, Word> terms;
    std::string name;
    std::set<Atom> leaves;
    std::set<Word> imms;
    std::size_t nodes{1};
    std::string key;
    std::string compact;
};

std::string Atom::render() const {
    switch (kind) {
    case Kind::Initial: return std::string(reg_name(reg)) + "_0";
    case Kind::Alloc: return "alloc[" + hex(site) + "]";
    case Kind::Fun: return name + "@" + hex(site);
    case Kind::MemInit: return "init" + name;
    }
    return "?";
}

namespace {

bool negative(Word w) { return static_cast<std::int64_t>(w) < 0; }

std::string render_sum(const std::map<SymExpr, Word>& terms, Word disp, bool compact) {
    const std::string plus = compact ? "+" : " + ";
    const std::string minus = compact ? "-" : " - ";
    std::string s;
    bool first = true;
    for (const auto& [t, c] : terms) {
        const bool neg = negative(c);
        const Word mag = neg ? Word{0} - c : c;
        if (first) s += neg ? "-" : "";
        else s += neg ? minus : plus;
        if (mag != 1) s += hex(mag) + "*";
        const bool paren = t.kind() == SymExpr::Kind::Sum;
        s += paren ? "(" + t.render(compact) + ")" : t.render(compact);
        first = false;
    }
    if (disp != 0) {
        if (negative(disp)) s += minus + hex(Word{0} - disp);
        else s += plus + hex(disp);
    }
    return s;
}

} // namespace

SymExpr SymExpr::imm(Word v) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Imm;
    n->value = v;
    n->imms.insert(v);
    n->key = n->compact = hex(v);
    return SymExpr(std::move(n));
}

SymExpr SymExpr::leaf(Atom a) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Leaf;
    n->key = n->compact = a.render();
    n->leaves.insert(a);
    n->atom = std::move(a);
    return SymExpr(std::move(n));
}

SymExpr SymExpr::state_part(std::string name) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::StatePart;
    n->key = n->compact = name;
    n->name = std::move(name);
    return SymExpr(std::move(n));
}

SymExpr SymExpr::deref(SymExpr addr, Word size) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Deref;
    n->value = size;
    n->key = "*[" + addr.render(false) + ", " + std::to_string(size) + "]";
    n->compact = "*[" + addr.render(true) + "," + std::to_string(size) + "]";
    n->leaves = addr.leaves();
    n->imms = addr.used_imms();
    n->nodes = 1 + addr.node_count();
    n->args.push_back(std::move(addr));
    return SymExpr(std::move(n));
}

SymExpr SymExpr::opaque(std::set<Atom> leaves) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Opaque;
    std::string s = "opaque{";
    bool first = true;
    for (const auto& a : leaves) {
        s += (first ? "" : ", ") + a.render();
        first = false;
    }
    s += "}";
    n->key = n->compact = s;
    n->nodes = 1 + leaves.size();
    n->leaves = std::move(leaves);
    return SymExpr(std::move(n));
}

SymExpr SymExpr::from_sum(SumView s) {
    for (auto it = s.terms.begin(); it != s.terms.end();) {
        it = it->second == 0 ? s.terms.erase(it) : std::next(it);
    }
    if (s.terms.empty()) return imm(s.disp);
    if (s.terms.size() == 1 && s.disp == 0 && s.terms.begin()->second == 1) return s.terms.begin()->first;
    auto n = std::make_shared<Node>();
    n->kind = Kind::Sum;
    n->value = s.disp;
    n->key = render_sum(s.terms, s.disp, false);
    n->compact = render_sum(s.terms, s.disp, true);
    for (const auto& [t, c] : s.terms) {
        n->leaves.insert(t.leaves().begin(), t.leaves().end());
        n->imms.insert(t.used_imms().begin(), t.used_imms().end());
        n->nodes += t.node_count();
    }
    n->terms = std::move(s.terms);
    return SymExpr(std::move(n));
}

// Operands cancelled or folded by normalization stay recorded, so that base
// and source extraction sees every input of the computation.
SymExpr SymExpr::with_leaves(SymExpr e, const std::set<Atom>& used, const std::set<Word>& imms) {
    if (std::includes(e.leaves().begin(), e.leaves().end(), used.begin(), used.end()) &&
        std::includes(e.used_imms().begin(), e.used_imms().end(), imms.begin(), imms.end()))
        return e;
    auto n = std::make_shared<Node>(*e.n_);
    n->leaves.insert(used.begin(), used.end());
    n->imms.insert(imms.begin(), imms.end());
    return SymExpr(std::move(n));
}

SymExpr::SumView SymExpr::as_sum() const {
    switch (kind()) {
    case Kind::Imm: return {{}, n_->value};
    case Kind::Sum: return {n_->terms, n_->value};
    default: return {{{*this, 1}}, 0};
    }
}

SymExpr SymExpr::make_app(Operation op, const std::vector<SymExpr>& args) {
    bool all_imm = true;
    for (const auto& a : args) all_imm = all_imm && a.kind() == Kind::Imm;
    std::set<Atom> used;
    std::set<Word> imms;
    for (const auto& a : args) {
        used.insert(a.leaves().begin(), a.leaves().end());
        imms.insert(a.used_imms().begin(), a.used_imms().end());
    }
    if (all_imm) {
        std::vector<Word> vals;
        for (const auto& a : args) vals.push_back(a.imm_value());
        return with_leaves(imm(apply_op(op, vals)), used, imms);
    }
    if (op == Operation::mov) return args[0];

    auto scaled = [&](const SymExpr& e, Word k) {
        SumView s = e.as_sum();
        for (auto& [t, c] : s.terms) c *= k;
        s.disp *= k;
        return with_leaves(from_sum(std::move(s)), used, imms);
    };
    switch (op) {
    case Operation::add:
    case Operation::sub: {
        SumView s = args[0].as_sum();
        const SumView r = args[1].as_sum();
        const Word sign = op == Operation::add ? Word{1} : ~Word{0};
        for (const auto& [t, c] : r.terms) s.terms[t] += sign * c;
        s.disp += sign * r.disp;
        return with_leaves(from_sum(std::move(s)), used, imms);
    }
    case Operation::mul:
        if (args[1].kind() == Kind::Imm) return scaled(args[0], args[1].imm_value());
        if (args[0].kind() == Kind::Imm) return scaled(args[1], args[0].imm_value());
        break;
    case Operation::shl:
        if (args[1].kind() == Kind::Imm) return scaled(args[0], Word{1} << (args[1].imm_value() & 63U));
        break;
    default: break;
    }

    auto n = std::make_shared<Node>();
    n->kind = Kind::App;
    n->op = op;
    std::string k = std::string(op_name(op)) + "(";
    std::string c = k;
    for (std::size_t i = 0; i < args.size(); ++i) {
        k += (i ? ", " : "") + args[i].render(false);
        c += (i ? "," : "") + args[i].render(true);
        n->leaves.insert(args[i].leaves().begin(), args[i].leaves().end());
        n->imms.insert(args[i].used_imms().begin(), args[i].used_imms().end());
        n->nodes += args[i].node_count();
    }
    n->key = k + ")";
    n->compact = c + ")";
    n->args = args;
    return SymExpr(std::move(n));
}

SymExpr::Kind SymExpr::kind() const { return n_->kind; }
Word SymExpr::imm_value() const { return n_->value; }
const Atom& SymExpr::atom() const { return n_->atom; }
Operation SymExpr::op() const { return n_->op; }
const std::vector<SymExpr>& SymExpr::args() const { return n_->args; }
const std::map<SymExpr, Word>& SymExpr::terms() const { return n_->terms; }
Word SymExpr::disp() const { return n_->kind == Kind::Sum ? n_->value : 0; }
const std::set<Atom>& SymExpr::leaves() const { return n_->leaves; }
const std::set<Word>& SymExpr::used_imms() const { return n_->imms; }
std::size_t SymExpr::node_count() const { return n_->nodes; }
const std::string& SymExpr::state_part_name() const { return n_->name; }
const std::string& SymExpr::key() const { return n_->key; }
std::string SymExpr::render(bool compact) const { return compact ? n_->compact : n_->key; }

SymExpr SymExpr::capped(std::size_t max_nodes) const {
    if (node_count() <= max_nodes) return *this;
    return opaque(leaves());
}

bool is_constant_computation(const SymExpr& e) {
    switch (e.kind()) {
    case SymExpr::Kind::Imm: return true;
    case SymExpr::Kind::Leaf:
        return e.atom().kind == Atom::Kind::Initial || e.atom().kind == Atom::Kind::Alloc;
    case SymExpr::Kind::App:
        for (const auto& a : e.args()) {
            if (!is_constant_computation(a)) return false;
        }
        return true;
    case SymExpr::Kind::Sum:
        for (const auto& [t, c] : e.terms()) {
            if (!is_constant_computation(t)) return false;
        }
        return true;
    default: return false;
    }
}

std::string Base::render() const {
    switch (kind) {
    case Kind::StackPointer: return "StackPointer@" + hex(addr);
    case Kind::Global: return "Global@" + hex(addr);
    case Kind::Alloc: return "Alloc@" + hex(addr);
    case Kind::Symbol: return "Symbol " + name;
    }
    return "?";
}

std::string Source::render() const {
    switch (kind) {
    case Kind::Constant: return constant.render();
    case Kind::BaseSrc: return base.render();
    case Kind::Fun: return "Fun " + fun;
    }
    return "?";
}

std::set<Base> bases_of(const SymExpr& e, const Context& ctx) {
    std::set<Base> out;
    const SymExpr::SumView s = e.as_sum();
    const SymExpr rsp0 = SymExpr::initial(Reg::rsp);
    if (s.terms.size() == 1 && s.terms.begin()->first == rsp0 && s.terms.begin()->second == 1 &&
        static_cast<std::int64_t>(s.disp) <= 0) {
        out.insert(Base::stack_pointer(ctx.function));
    }
    for (const auto& [t, c] : s.terms) {
        if (c == 1 && t.kind() == SymExpr::Kind::Leaf && t.atom().kind == Atom::Kind::Alloc)
            out.insert(Base::alloc(t.atom().site));
    }
    if (ctx.program != nullptr) {
        auto global = [&](Word w) {
            if (ctx.program->section_of(w) != nullptr) out.insert(Base::global(w));
            if (const std::string* sym = ctx.program->symbol_at(w)) out.insert(Base::symbol(*sym));
        };
        global(s.disp);
        for (Word w : e.used_imms()) global(w);
    }
    return out;
}

std::set<Source> sources_of(const SymExpr& e, const Context& ctx) {
    std::set<Source> out;
    for (const auto& a : e.leaves()) {
        switch (a.kind) {
        case Atom::Kind::Initial:
        case Atom::Kind::MemInit: out.insert(Source::constant_src(a)); break;
        case Atom::Kind::Alloc: out.insert(Source::base_src(Base::alloc(a.site))); break;
        case Atom::Kind::Fun: out.insert(Source::fun_src(a.name)); break;
        }
    }
    for (const auto& b : bases_of(e, ctx)) out.insert(Source::base_src(b));
    return out;
}

std::optional<Word> evaluate(const SymExpr& e, const Env& env) {
    switch (e.kind()) {
    case SymExpr::Kind::Imm: return e.imm_value();
    case SymExpr::Kind::Leaf: {
        auto it = env.values.find(e.atom());
        if (it == env.values.end()) return std::nullopt;
        return it->second;
    }
    case SymExpr::Kind::App: {
        std::vector<Word> vals;
        for (const auto& a : e.args()) {
            auto v = evaluate(a, env);
            if (!v) return std::nullopt;
            vals.push_back(*v);
        }
        return apply_op(e.op(), vals);
    }
    case SymExpr::Kind::Sum: {
        Word acc = e.disp();
        for (const auto& [t, c] : e.terms()) {
            auto v = evaluate(t, env);
            if (!v) return std::nullopt;
            acc += c * *v;
        }
        return acc;
    }
    default: return std::nullopt;
    }
}

} // namespace ballpark
