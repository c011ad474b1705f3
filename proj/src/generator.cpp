// Copyright (c) Ballpark contributors.
// SPDX-License-Identifier: MIT

#include "ballpark/generator.hpp"

#include <random>
#include <sstream>

#include "ballpark/concrete.hpp"

namespace ballpark {

const std::vector<std::string>& feature_buckets() {
    static const std::vector<std::string> buckets{"stack", "alloc", "global", "symbol", "loop",
                                                  "cond",  "pure",  "overlap", "call", "param"};
    return buckets;
}

namespace {

constexpr Addr kMain = 0x1000;
constexpr Addr kHelper = 0x5000;

class Builder {
  public:
    Builder(std::uint64_t seed, std::size_t index) : rng_(splitmix64(seed ^ splitmix64(index + 1))) {}

    GeneratedProgram build(std::size_t index) {
        for (const auto& f : feature_buckets()) {
            if (roll(2) == 0) features_.insert(f);
        }
        while (features_.size() < 2) features_.insert(feature_buckets()[roll(feature_buckets().size())]);
        features_.insert("stack");

        node("rbp := mov(rsp) ; rsp := sub(rsp, 0x100)");
        if (has("param")) node("r15 := mov(rsi)");
        if (has("pure")) {
            call("getc");
            node("r12 := and(rax, 0x78)");
        }
        if (has("alloc")) {
            call("malloc");
            node("rbx := mov(rax)");
        }
        const std::size_t snippets = 3 + roll(6);
        for (std::size_t i = 0; i < snippets; ++i) snippet();
        // Make sure every chosen bucket shows up at least once.
        for (const auto& f : std::set<std::string>(features_)) emit(f);
        os_ << hex(cur_) << ": rsp := mov(rbp) ; ret\n";
        if (has("call")) os_ << hex(kHelper) << ": store [rsp - 0x8, 8] := rdi ; ret\n";

        std::ostringstream head;
        head << "# generated program " << index << "\n";
        head << "section .data 0x2000 0x2fff\n";
        head << "symbol buf 0x8000 0x100\n";
        head << "extern getc pure\n";
        head << "extern malloc alloc\n";
        head << "func main @ " << hex(kMain) << "\n";
        if (has("call")) head << "func helper @ " << hex(kHelper) << "\n";
        GeneratedProgram g;
        g.name = "gen_" + std::to_string(index);
        g.text = head.str() + os_.str();
        g.features = features_;
        return g;
    }

  private:
    std::size_t roll(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
    bool has(const std::string& f) const { return features_.contains(f); }

    // One node with a fall-through jump.
    void node(const std::string& body) {
        os_ << hex(cur_) << ": " << body << " ; jmp " << hex(cur_ + 1) << "\n";
        ++cur_;
    }

    void call(const std::string& callee) {
        os_ << hex(cur_) << ": call " << callee << " -> " << hex(cur_ + 1) << "\n";
        ++cur_;
    }

    std::string stack_slot() { return "[rbp - " + hex(8 * (1 + roll(24))) + ", 8]"; }

    std::string value() {
        std::vector<std::string> v{"0x0", "0x2008", "rbp", "rdi", "0x8010"};
        if (has("alloc")) v.push_back("rbx");
        if (has("pure")) v.push_back("r12");
        return v[roll(v.size())];
    }

    void snippet() {
        std::vector<std::string> f(features_.begin(), features_.end());
        emit(f[roll(f.size())]);
    }

    void emit(const std::string& f) {
        if (f == "stack") {
            if (roll(3) == 0) node("rax := load " + stack_slot() + " ; store " + stack_slot() + " := rax");
            else node("store " + stack_slot() + " := " + value());
        } else if (f == "global") {
            node("store [" + hex(0x2000 + 8 * roll(32)) + ", 8] := " + value());
        } else if (f == "symbol") {
            node("store [" + hex(0x8000 + 8 * roll(32)) + ", 8] := " + value());
        } else if (f == "alloc") {
            node("store [rbx + " + hex(8 * roll(64)) + ", 8] := " + value());
        } else if (f == "pure") {
            if (has("alloc") && roll(2) == 0) node("store [rbx + r12, 8] := " + value());
            else node("store [rbp + r12 - 0x100, 8] := " + value());
        } else if (f == "overlap") {
            const Word k = 8 * (2 + roll(20));
            node("store [rbp - " + hex(k) + ", 8] := " + value() + " ; store [rbp - " + hex(k - 4) +
                 ", 4] := 0x1 ; rax := load [rbp - " + hex(k) + ", 8] ; store " + stack_slot() + " := rax");
        } else if (f == "loop") {
            loop();
        } else if (f == "cond") {
            cond();
        } else if (f == "param") {
            node("store [r15 + " + hex(8 * roll(16)) + ", 8] := " + value());
        } else if (f == "call") {
            node(std::string("rdi := mov(") + (has("alloc") && roll(2) == 0 ? "rbx" : "rbp") + ")");
            os_ << hex(cur_) << ": call helper -> " << hex(cur_ + 1) << "\n";
            ++cur_;
        }
    }

    void loop() {
        const bool heap = has("alloc") && roll(2) == 0;
        const Word len = 8 * (2 + roll(14));
        if (heap) node("r13 := mov(rbx) ; r14 := add(rbx, " + hex(len) + ")");
        else node("r13 := sub(rbp, " + hex(len) + ") ; r14 := mov(rbp)");
        const Addr head = cur_;
        os_ << hex(head) << ": store [r13, 8] := " << value() << " ; r13 := add(r13, 0x8) ; CF := ult(r13, r14)"
            << " ; cjmp CF, " << hex(head) << ", " << hex(head + 1) << "\n";
        ++cur_;
    }

    void cond() {
        const std::string probe = has("pure") ? "r12" : "rsi";
        const Addr branch = cur_;
        const Addr then_block = branch + 1;
        const Addr else_block = branch + 2;
        const Addr join = branch + 3;
        os_ << hex(branch) << ": ZF := ult(" << probe << ", 0x40) ; cjmp ZF, " << hex(then_block) << ", "
            << hex(else_block) << "\n";
        os_ << hex(then_block) << ": store " << stack_slot() << " := " << value() << " ; jmp " << hex(join) << "\n";
        const std::string other = has("alloc") ? "[rbx + " + hex(8 * roll(16)) + ", 8]"
                                               : "[" + hex(0x2000 + 8 * roll(16)) + ", 8]";
        os_ << hex(else_block) << ": store " << other << " := " << value() << " ; jmp " << hex(join) << "\n";
        cur_ = join;
    }

    std::mt19937_64 rng_;
    std::set<std::string> features_;
    std::ostringstream os_;
    Addr cur_{kMain};
};

} // namespace

GeneratedProgram generate_program(std::uint64_t seed, std::size_t index) { return Builder(seed, index).build(index); }

std::vector<GeneratedProgram> generate_corpus(std::size_t count, std::uint64_t seed) {
    std::vector<GeneratedProgram> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(generate_program(seed, i));
    return out;
}

} // namespace ballpark
