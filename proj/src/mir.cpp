// Copyright (c) Ballpark contributors.
// SPDX-License-Identifier: MIT

#include "ballpark/mir.hpp"

#include <cctype>
#include <charconv>
#include <deque>
#include <sstream>

namespace ballpark {

namespace {

constexpr std::array<std::string_view, kNumRegs> kRegNames{"rax", "rbx", "rcx", "rdx", "rsi", "rdi", "rbp", "rsp",
                                                           "r8",  "r9",  "r10", "r11", "r12", "r13", "r14", "r15"};
constexpr std::array<std::string_view, kNumRegs> kReg32Names{"eax", "ebx", "ecx", "edx", "esi", "edi",
                                                             "ebp", "esp", "r8d", "r9d", "r10d", "r11d",
                                                             "r12d", "r13d", "r14d", "r15d"};
constexpr std::array<std::string_view, 17> kOpNames{"add", "sub", "mul", "udiv", "and", "or",  "xor", "shl", "shr",
                                                    "sar", "sext", "zext", "mov", "eq",  "ne",  "ult", "slt"};

} // namespace

std::string hex(Word w) {
    std::ostringstream os;
    os << "0x" << std::hex << w;
    return os.str();
}

std::string_view reg_name(Reg r) { return kRegNames[static_cast<std::size_t>(r)]; }

std::optional<Reg> reg_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kNumRegs; ++i) {
        if (kRegNames[i] == name) return static_cast<Reg>(i);
    }
    return std::nullopt;
}

std::string RegRef::name() const {
    return std::string(low32 ? kReg32Names[static_cast<std::size_t>(reg)] : kRegNames[static_cast<std::size_t>(reg)]);
}

std::optional<RegRef> regref_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kNumRegs; ++i) {
        if (kRegNames[i] == name) return RegRef{static_cast<Reg>(i), false};
        if (kReg32Names[i] == name) return RegRef{static_cast<Reg>(i), true};
    }
    return std::nullopt;
}

std::string_view op_name(Operation op) { return kOpNames[static_cast<std::size_t>(op)]; }

std::optional<Operation> op_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kOpNames.size(); ++i) {
        if (kOpNames[i] == name) return static_cast<Operation>(i);
    }
    return std::nullopt;
}

std::size_t op_arity(Operation op) { return op == Operation::mov ? 1 : 2; }

Word apply_op(Operation op, const std::vector<Word>& a) {
    auto bits = [](Word b) { return static_cast<unsigned>(b & 63U); };
    switch (op) {
    case Operation::add: return a[0] + a[1];
    case Operation::sub: return a[0] - a[1];
    case Operation::mul: return a[0] * a[1];
    case Operation::udiv: return a[1] == 0 ? 0 : a[0] / a[1];
    case Operation::and_: return a[0] & a[1];
    case Operation::or_: return a[0] | a[1];
    case Operation::xor_: return a[0] ^ a[1];
    case Operation::shl: return a[0] << bits(a[1]);
    case Operation::shr: return a[0] >> bits(a[1]);
    case Operation::sar: return static_cast<Word>(static_cast<std::int64_t>(a[0]) >> bits(a[1]));
    case Operation::sext: {
        if (a[1] == 0 || a[1] >= 64) return a[0];
        const unsigned shift = 64U - static_cast<unsigned>(a[1]);
        return static_cast<Word>(static_cast<std::int64_t>(a[0] << shift) >> shift);
    }
    case Operation::zext:
        if (a[1] >= 64) return a[0];
        return a[0] & ((Word{1} << a[1]) - 1);
    case Operation::mov: return a[0];
    case Operation::eq: return a[0] == a[1] ? 1 : 0;
    case Operation::ne: return a[0] != a[1] ? 1 : 0;
    case Operation::ult: return a[0] < a[1] ? 1 : 0;
    case Operation::slt: return static_cast<std::int64_t>(a[0]) < static_cast<std::int64_t>(a[1]) ? 1 : 0;
    }
    return 0;
}

char class_letter(MemClass c) {
    switch (c) {
    case MemClass::L: return 'L';
    case MemClass::G: return 'G';
    case MemClass::H: return 'H';
    }
    return '?';
}

ExternModel ExternModel::default_havoc() {
    ExternModel m;
    m.kind = Kind::Havoc;
    m.clobbers = {Reg::rax, Reg::rcx, Reg::rdx, Reg::rsi, Reg::rdi, Reg::r8, Reg::r9, Reg::r10, Reg::r11};
    m.may_write = {MemClass::H, MemClass::G};
    return m;
}

const Node& Program::at(Addr a) const {
    auto it = nodes.find(a);
    if (it == nodes.end()) throw std::out_of_range("address " + hex(a) + " not in program");
    return it->second;
}

Addr Program::entry(const std::string& name) const {
    auto it = entries.find(name);
    if (it == entries.end()) throw std::out_of_range("unknown entry '" + name + "'");
    return it->second;
}

const Section* Program::section_of(Addr a) const {
    for (const auto& s : sections) {
        if (s.contains(a)) return &s;
    }
    return nullptr;
}

const std::string* Program::symbol_at(Addr a) const {
    auto it = symbols.upper_bound(a);
    if (it == symbols.begin()) return nullptr;
    --it;
    if (a - it->first < it->second.size) return &it->second.name;
    return nullptr;
}

const ExternModel* Program::extern_model(const CallTarget& t) const {
    if (const auto* name = std::get_if<std::string>(&t)) {
        auto it = externs.find(*name);
        return it == externs.end() ? nullptr : &it->second;
    }
    return nullptr;
}

ParseError::ParseError(std::size_t line, std::size_t col, const std::string& msg)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) + ": " + msg), line_(line), col_(col) {}

// ---------------------------------------------------------------------------
// Lexer / parser
// ---------------------------------------------------------------------------

namespace {

struct Token {
    enum class Kind { Ident, Number, Punct, End };
    Kind kind;
    std::string text;
    Word value{0};
    std::size_t col;
};

class LineLexer {
  public:
    LineLexer(std::string_view text, std::size_t line) : line_(line) {
        std::size_t i = 0;
        while (i < text.size()) {
            const char c = text[i];
            if (c == '#') break;
            if (std::isspace(static_cast<unsigned char>(c))) {
                ++i;
                continue;
            }
            const std::size_t col = i + 1;
            if (std::isdigit(static_cast<unsigned char>(c))) {
                std::size_t j = i;
                if (text.substr(i, 2) == "0x" || text.substr(i, 2) == "0X") j += 2;
                const std::size_t digits = j;
                while (j < text.size() && std::isxdigit(static_cast<unsigned char>(text[j]))) ++j;
                if (j == digits) throw ParseError(line_, col, "malformed number");
                Word v = 0;
                auto [ptr, ec] = std::from_chars(text.data() + digits, text.data() + j, v, 16);
                if (ec != std::errc{} || ptr != text.data() + j) throw ParseError(line_, col, "malformed number");
                if (j < text.size() && (std::isalpha(static_cast<unsigned char>(text[j])) || text[j] == '_'))
                    throw ParseError(line_, col, "malformed number");
                toks_.push_back({Token::Kind::Number, std::string(text.substr(i, j - i)), v, col});
                i = j;
            } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.') {
                std::size_t j = i;
                while (j < text.size() &&
                       (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_' || text[j] == '.'))
                    ++j;
                toks_.push_back({Token::Kind::Ident, std::string(text.substr(i, j - i)), 0, col});
                i = j;
            } else {
                static constexpr std::array<std::string_view, 2> two{":=", "->"};
                bool matched = false;
                for (auto t : two) {
                    if (text.substr(i, 2) == t) {
                        toks_.push_back({Token::Kind::Punct, std::string(t), 0, col});
                        i += 2;
                        matched = true;
                        break;
                    }
                }
                if (matched) continue;
                if (std::string_view("[](),;:+-*@{}").find(c) == std::string_view::npos)
                    throw ParseError(line_, col, std::string("unexpected character '") + c + "'");
                toks_.push_back({Token::Kind::Punct, std::string(1, c), 0, col});
                ++i;
            }
        }
        toks_.push_back({Token::Kind::End, "", 0, text.size() + 1});
    }

    const Token& peek() const { return toks_[pos_]; }
    const Token& next() { return toks_[pos_ == toks_.size() - 1 ? pos_ : pos_++]; }
    bool at_end() const { return peek().kind == Token::Kind::End; }
    bool is_punct(std::string_view p) const { return peek().kind == Token::Kind::Punct && peek().text == p; }
    bool is_ident(std::string_view p) const { return peek().kind == Token::Kind::Ident && peek().text == p; }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line_, peek().col, msg); }

    void expect(std::string_view p) {
        if (!is_punct(p)) fail("expected '" + std::string(p) + "'");
        next();
    }
    Word number() {
        if (peek().kind != Token::Kind::Number) fail("expected number");
        return next().value;
    }
    std::string ident() {
        if (peek().kind != Token::Kind::Ident) fail("expected identifier");
        return next().text;
    }
    std::size_t line() const { return line_; }

  private:
    std::vector<Token> toks_;
    std::size_t pos_{0};
    std::size_t line_;
};

bool is_flag_name(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!(std::isupper(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) || c == '_'))
            return false;
    }
    return true;
}

RegRef parse_reg(LineLexer& lx) {
    const auto col_tok = lx.peek();
    const std::string name = lx.ident();
    auto r = regref_from_name(name);
    if (!r) throw ParseError(lx.line(), col_tok.col, "unknown register '" + name + "'");
    return *r;
}

// [ terms , size ]
MemRef parse_mem(LineLexer& lx) {
    lx.expect("[");
    MemRef m;
    bool first = true;
    while (!lx.is_punct(",")) {
        bool negative = false;
        if (!first) {
            if (lx.is_punct("+")) {
                lx.next();
            } else if (lx.is_punct("-")) {
                lx.next();
                negative = true;
            } else {
                lx.fail("expected '+', '-' or ','");
            }
        } else if (lx.is_punct("-")) {
            lx.next();
            negative = true;
        }
        first = false;
        if (lx.peek().kind == Token::Kind::Number) {
            const Word n = lx.number();
            if (lx.is_punct("*")) {
                lx.next();
                if (negative) lx.fail("negative register coefficient");
                m.addr.terms.push_back({n, parse_reg(lx)});
            } else {
                m.addr.disp += negative ? Word{0} - n : n;
            }
        } else {
            const RegRef r = parse_reg(lx);
            if (negative) lx.fail("negative register coefficient");
            Word coeff = 1;
            if (lx.is_punct("*")) {
                lx.next();
                coeff = lx.number();
            }
            m.addr.terms.push_back({coeff, r});
        }
    }
    lx.expect(",");
    const auto size_col = lx.peek().col;
    const Word size = lx.number();
    lx.expect("]");
    if (size != 1 && size != 2 && size != 4 && size != 8)
        throw ParseError(lx.line(), size_col, "memory size must be 1, 2, 4 or 8");
    if (m.addr.terms.size() > 2) lx.fail("at most two register terms in an address");
    for (const auto& t : m.addr.terms) {
        if (t.coeff != 1 && t.coeff != 2 && t.coeff != 4 && t.coeff != 8)
            lx.fail("address coefficients must be 1, 2, 4 or 8");
    }
    m.size = static_cast<std::uint8_t>(size);
    return m;
}

Operand parse_operand(LineLexer& lx) {
    if (lx.is_punct("[")) return parse_mem(lx);
    if (lx.peek().kind == Token::Kind::Number) return Imm{lx.number()};
    const auto tok = lx.peek();
    const std::string name = lx.ident();
    if (auto r = regref_from_name(name)) return *r;
    if (is_flag_name(name)) return FlagRef{name};
    throw ParseError(lx.line(), tok.col, "unknown register '" + name + "'");
}

MicroInstruction parse_rhs(LineLexer& lx, Operand dst) {
    MicroInstruction mi;
    mi.dst = std::move(dst);
    if (lx.is_ident("load")) {
        lx.next();
        mi.op = Operation::mov;
        mi.ins.push_back(parse_mem(lx));
        return mi;
    }
    if (lx.peek().kind == Token::Kind::Ident) {
        if (auto op = op_from_name(lx.peek().text)) {
            const auto col = lx.peek().col;
            lx.next();
            if (lx.is_punct("(")) {
                lx.next();
                mi.op = *op;
                while (!lx.is_punct(")")) {
                    if (!mi.ins.empty()) lx.expect(",");
                    mi.ins.push_back(parse_operand(lx));
                }
                lx.expect(")");
                if (mi.ins.size() != op_arity(*op))
                    throw ParseError(lx.line(), col, "operation '" + std::string(op_name(*op)) + "' expects " +
                                                         std::to_string(op_arity(*op)) + " operands");
                return mi;
            }
            throw ParseError(lx.line(), col, "expected '(' after operation name");
        }
    }
    mi.op = Operation::mov;
    mi.ins.push_back(parse_operand(lx));
    return mi;
}

MicroInstruction parse_micro(LineLexer& lx) {
    if (lx.is_ident("store")) {
        lx.next();
        MemRef m = parse_mem(lx);
        lx.expect(":=");
        return parse_rhs(lx, m);
    }
    Operand dst = parse_operand(lx);
    if (std::holds_alternative<Imm>(dst)) lx.fail("destination cannot be an immediate");
    lx.expect(":=");
    return parse_rhs(lx, std::move(dst));
}

struct PendingTarget {
    Addr target;
    std::size_t line;
    std::size_t col;
    std::string callee;  // set for the return address of a named call
};

std::optional<Terminator> parse_terminator(LineLexer& lx, std::vector<PendingTarget>& pending,
                                           std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>>&
                                               call_names) {
    if (lx.peek().kind != Token::Kind::Ident) return std::nullopt;
    const std::string kw = lx.peek().text;
    auto target = [&]() {
        const auto col = lx.peek().col;
        const Addr a = lx.number();
        pending.push_back({a, lx.line(), col, {}});
        return a;
    };
    if (kw == "jmp") {
        lx.next();
        return Jmp{target()};
    }
    if (kw == "cjmp") {
        lx.next();
        const std::string flag = lx.ident();
        if (!is_flag_name(flag)) lx.fail("expected flag name");
        lx.expect(",");
        const Addr t = target();
        lx.expect(",");
        const Addr e = target();
        return CJmp{flag, t, e};
    }
    if (kw == "call") {
        lx.next();
        CallTarget ct;
        if (lx.peek().kind == Token::Kind::Number) {
            ct = target();
        } else {
            const auto col = lx.peek().col;
            std::string name = lx.ident();
            call_names.push_back({name, {lx.line(), col}});
            ct = std::move(name);
        }
        lx.expect("->");
        const Addr ret = target();
        if (const auto* name = std::get_if<std::string>(&ct)) pending.back().callee = *name;
        return Call{std::move(ct), ret};
    }
    if (kw == "icall") {
        lx.next();
        Operand o = parse_operand(lx);
        lx.expect("->");
        return ICall{std::move(o), target()};
    }
    if (kw == "ijmp") {
        lx.next();
        return IJmp{parse_operand(lx)};
    }
    if (kw == "ret") {
        lx.next();
        return Ret{};
    }
    if (kw == "exit") {
        lx.next();
        return Exit{};
    }
    return std::nullopt;
}

ClassSet parse_classes(LineLexer& lx) {
    const std::string s = lx.ident();
    ClassSet out;
    for (char c : s) {
        if (c == 'L') out.insert(MemClass::L);
        else if (c == 'G') out.insert(MemClass::G);
        else if (c == 'H') out.insert(MemClass::H);
        else lx.fail("designation classes are drawn from L, G, H");
    }
    return out;
}

void parse_extern(LineLexer& lx, Program& p) {
    const std::string name = lx.ident();
    const std::string kind = lx.ident();
    ExternModel m;
    if (kind == "alloc") m.kind = ExternModel::Kind::Allocator;
    else if (kind == "pure") m.kind = ExternModel::Kind::PureReturn;
    else if (kind == "exit") m.kind = ExternModel::Kind::Exit;
    else if (kind == "havoc") {
        m = ExternModel::default_havoc();
        while (!lx.at_end()) {
            const std::string key = lx.ident();
            if (key == "clobber") {
                m.clobbers.clear();
                do {
                    if (lx.is_punct(",")) lx.next();
                    m.clobbers.insert(parse_reg(lx).reg);
                } while (lx.is_punct(","));
            } else if (key == "writes") {
                m.may_write = parse_classes(lx);
            } else if (key == "nowrites") {
                m.may_write.clear();
            } else {
                lx.fail("unknown havoc attribute '" + key + "'");
            }
        }
    } else {
        lx.fail("unknown extern kind '" + kind + "'");
    }
    if (!lx.at_end()) lx.fail("trailing input");
    p.externs[name] = std::move(m);
}

} // namespace

Program parse_program(std::string_view text) {
    Program p;
    std::vector<PendingTarget> pending;
    std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> call_names;
    std::size_t lineno = 0;
    auto parse_node = [&](LineLexer& lx) {
        const auto col = lx.peek().col;
        const Addr a = lx.number();
        lx.expect(":");
        if (p.nodes.contains(a)) throw ParseError(lx.line(), col, "duplicate address " + hex(a));
        Node n;
        std::optional<Terminator> term;
        while (true) {
            term = parse_terminator(lx, pending, call_names);
            if (term) break;
            n.body.push_back(parse_micro(lx));
            if (!lx.is_punct(";")) lx.fail("expected ';' followed by a terminator");
            lx.next();
        }
        n.term = std::move(*term);
        p.nodes.emplace(a, std::move(n));
    };
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++lineno;
        LineLexer lx(line, lineno);
        if (lx.at_end()) continue;

        if (lx.is_ident("section")) {
            lx.next();
            Section s;
            s.name = lx.ident();
            s.lo = lx.number();
            s.hi = lx.number();
            if (s.hi < s.lo) lx.fail("section range is empty");
            for (const auto& o : p.sections) {
                if (s.lo <= o.hi && o.lo <= s.hi) lx.fail("section overlaps '" + o.name + "'");
            }
            if (!lx.at_end()) lx.fail("trailing input");
            p.sections.push_back(std::move(s));
        } else if (lx.is_ident("symbol")) {
            lx.next();
            Symbol s;
            s.name = lx.ident();
            const Addr a = lx.number();
            if (!lx.at_end()) s.size = lx.number();
            if (s.size == 0) lx.fail("symbol size must be positive");
            if (!lx.at_end()) lx.fail("trailing input");
            p.symbols[a] = std::move(s);
        } else if (lx.is_ident("extern")) {
            lx.next();
            parse_extern(lx, p);
        } else if (lx.is_ident("func")) {
            lx.next();
            const std::string name = lx.ident();
            lx.expect("@");
            const auto col = lx.peek().col;
            const Addr a = lx.number();
            pending.push_back({a, lineno, col, {}});
            p.entries[name] = a;
            // Single-line form: func f @ a { a: ... }
            if (lx.is_punct("{")) {
                lx.next();
                while (!lx.at_end() && !lx.is_punct("}")) parse_node(lx);
                lx.expect("}");
            }
            if (!lx.at_end()) lx.fail("trailing input");
        } else if (lx.peek().kind == Token::Kind::Number) {
            parse_node(lx);
            if (!lx.at_end()) lx.fail("trailing input after terminator");
        } else {
            lx.fail("unexpected '" + lx.peek().text + "'");
        }
    }

    for (const auto& [name, pos] : call_names) {
        if (p.externs.contains(name)) continue;
        if (!p.entries.contains(name)) throw ParseError(pos.first, pos.second, "unknown target '" + name + "'");
    }
    // Calls naming a declared function become internal address calls.
    for (auto& [a, n] : p.nodes) {
        if (auto* c = std::get_if<Call>(&n.term)) {
            if (const auto* name = std::get_if<std::string>(&c->target)) {
                if (!p.externs.contains(*name)) c->target = p.entries.at(*name);
            }
        }
    }
    for (const auto& t : pending) {
        // Calls that never return need no return address in the program.
        if (!t.callee.empty()) {
            auto it = p.externs.find(t.callee);
            if (it != p.externs.end() && it->second.kind == ExternModel::Kind::Exit) continue;
        }
        if (!p.nodes.contains(t.target)) throw ParseError(t.line, t.col, "unknown target " + hex(t.target));
    }
    return p;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace {

std::string render_mem(const MemRef& m) {
    std::string s = "[";
    bool first = true;
    for (const auto& t : m.addr.terms) {
        if (!first) s += " + ";
        s += t.reg.name();
        if (t.coeff != 1) s += "*" + hex(t.coeff);
        first = false;
    }
    const auto sd = static_cast<std::int64_t>(m.addr.disp);
    if (first) {
        s += hex(m.addr.disp);
    } else if (sd < 0) {
        s += " - " + hex(Word{0} - m.addr.disp);
    } else if (sd > 0) {
        s += " + " + hex(m.addr.disp);
    }
    s += ", " + std::to_string(m.size) + "]";
    return s;
}

std::string render_target(const CallTarget& t) {
    if (const auto* n = std::get_if<std::string>(&t)) return *n;
    return hex(std::get<Addr>(t));
}

std::string render_classes(const ClassSet& c) {
    std::string s;
    for (auto x : c) s += class_letter(x);
    return s;
}

} // namespace

std::string render_operand(const Operand& o) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Imm>) return hex(v.value);
            else if constexpr (std::is_same_v<T, RegRef>) return v.name();
            else if constexpr (std::is_same_v<T, FlagRef>) return v.name;
            else return render_mem(v);
        },
        o);
}

std::string render_program(const Program& p) {
    std::ostringstream os;
    for (const auto& s : p.sections) os << "section " << s.name << ' ' << hex(s.lo) << ' ' << hex(s.hi) << '\n';
    for (const auto& [a, s] : p.symbols) os << "symbol " << s.name << ' ' << hex(a) << ' ' << hex(s.size) << '\n';
    for (const auto& [name, m] : p.externs) {
        os << "extern " << name << ' ';
        switch (m.kind) {
        case ExternModel::Kind::Allocator: os << "alloc"; break;
        case ExternModel::Kind::PureReturn: os << "pure"; break;
        case ExternModel::Kind::Exit: os << "exit"; break;
        case ExternModel::Kind::Havoc: {
            os << "havoc";
            if (!m.clobbers.empty()) {
                os << " clobber ";
                bool first = true;
                for (auto r : m.clobbers) {
                    os << (first ? "" : ",") << reg_name(r);
                    first = false;
                }
            }
            if (m.may_write.empty()) os << " nowrites";
            else os << " writes " << render_classes(m.may_write);
            break;
        }
        }
        os << '\n';
    }
    for (const auto& [name, a] : p.entries) os << "func " << name << " @ " << hex(a) << '\n';
    for (const auto& [a, n] : p.nodes) {
        os << hex(a) << ": ";
        for (const auto& mi : n.body) {
            if (const auto* m = std::get_if<MemRef>(&mi.dst)) os << "store " << render_mem(*m);
            else os << render_operand(mi.dst);
            os << " := " << op_name(mi.op) << '(';
            for (std::size_t i = 0; i < mi.ins.size(); ++i) os << (i ? ", " : "") << render_operand(mi.ins[i]);
            os << ") ; ";
        }
        std::visit(
            [&](const auto& t) {
                using T = std::decay_t<decltype(t)>;
                if constexpr (std::is_same_v<T, Jmp>) os << "jmp " << hex(t.target);
                else if constexpr (std::is_same_v<T, CJmp>)
                    os << "cjmp " << t.flag << ", " << hex(t.then_target) << ", " << hex(t.else_target);
                else if constexpr (std::is_same_v<T, Call>) os << "call " << render_target(t.target) << " -> " << hex(t.ret);
                else if constexpr (std::is_same_v<T, ICall>) os << "icall " << render_operand(t.target) << " -> " << hex(t.ret);
                else if constexpr (std::is_same_v<T, IJmp>) os << "ijmp " << render_operand(t.target);
                else if constexpr (std::is_same_v<T, Ret>) os << "ret";
                else os << "exit";
            },
            n.term);
        os << '\n';
    }
    return os.str();
}

Successors successors(const Program& p, Addr a) {
    const Node& n = p.at(a);
    return std::visit(
        [&](const auto& t) -> Successors {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, Jmp>) return Known{{t.target}};
            else if constexpr (std::is_same_v<T, CJmp>) return Known{{t.then_target, t.else_target}};
            else if constexpr (std::is_same_v<T, Call>) {
                const ExternModel* m = p.extern_model(t.target);
                if (m && m->kind == ExternModel::Kind::Exit) return Known{};
                return Known{{t.ret}};
            } else if constexpr (std::is_same_v<T, ICall>) return NeedsResolution{t.target};
            else if constexpr (std::is_same_v<T, IJmp>) return NeedsResolution{t.target};
            else return Known{};
        },
        n.term);
}

std::set<Addr> reachable_from(const Program& p, Addr entry) {
    std::set<Addr> seen;
    std::deque<Addr> work{entry};
    while (!work.empty()) {
        const Addr a = work.front();
        work.pop_front();
        if (!p.contains(a) || !seen.insert(a).second) continue;
        const Node& n = p.at(a);
        if (const auto* ic = std::get_if<ICall>(&n.term)) work.push_back(ic->ret);
        const Successors succ = successors(p, a);
        if (const auto* k = std::get_if<Known>(&succ)) {
            for (Addr t : k->targets) work.push_back(t);
        }
    }
    return seen;
}

} // namespace ballpark
