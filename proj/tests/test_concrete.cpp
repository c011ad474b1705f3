// Copyright (c) Ballpark contributors.
// SPDX-License-Identifier: MIT

#include <catch_amalgamated.hpp>

#include <json.hpp>
#include <random>

#include "ballpark/concrete.hpp"
#include "support.hpp"

using namespace ballpark;

namespace {

// Little-endian byte map; the reference for reads within written bytes.
struct ByteModel {
    std::map<Addr, std::uint8_t> bytes;
    void write(Addr a, Word size, Word v) {
        for (Word i = 0; i < size; ++i) bytes[a + i] = static_cast<std::uint8_t>(v >> (8 * i));
    }
    Word read(Addr a, Word size) const {
        Word v = 0;
        for (Word i = 0; i < size; ++i) v |= Word{bytes.at(a + i)} << (8 * i);
        return v;
    }
};

const SymExpr kShadow = SymExpr::imm(0);

} // namespace

TEST_CASE("sub-region read extracts little-endian bytes") {
    CMem m;
    m.write(1000, 8, CVal::of(0x1122334455667788), kShadow);
    CHECK(m.read(1000, 4, 1).val == CVal::of(0x55667788));
    CHECK(m.read(1004, 4, 1).val == CVal::of(0x11223344));
    CHECK(m.read(1002, 2, 1).val == CVal::of(0x5566));
}

TEST_CASE("sub-region reads agree with a byte model") {
    std::mt19937_64 rng(5);
    for (int round = 0; round < 200; ++round) {
        CMem m;
        ByteModel ref;
        const Addr base = 0x1000;
        const Word v = rng();
        m.write(base, 8, CVal::of(v), kShadow);
        ref.write(base, 8, v);
        const Word size = Word{1} << (rng() % 4);
        const Addr off = (rng() % (9 - size));
        CHECK(m.read(base + off, size, 3).val == CVal::of(ref.read(base + off, size)));
    }
}

TEST_CASE("unwritten memory is seed-derived") {
    CMem m;
    CHECK(m.read(2000, 8, 42).val == CVal::of(seed_word(2000, 8, 42)));
    CMem n;
    CHECK(n.read(2000, 8, 43).val == CVal::of(seed_word(2000, 8, 43)));
}

TEST_CASE("partial overlap reads Top and taints the cell") {
    CMem m;
    m.write(1000, 8, CVal::of(7), kShadow);
    CHECK(m.read(996, 8, 1).val.is_top());
    CHECK(m.read(1000, 8, 1).val.is_top());
    CHECK(m.well_formed());
}

TEST_CASE("enclosed sub-write splits the cell") {
    const Addr r0 = 0x7000;
    CMem m;
    m.write(r0 - 16, 8, CVal::of(0xaaaaaaaabbbbbbbb), kShadow);
    m.write(r0 - 16, 4, CVal::of(0x12345678), kShadow);
    const auto& cells = m.cells();
    REQUIRE(cells.size() == 2);
    CHECK(cells.at(r0 - 16).size == 4);
    CHECK(cells.at(r0 - 16).val == CVal::of(0x12345678));
    CHECK(cells.at(r0 - 12).size == 4);
    CHECK(cells.at(r0 - 12).val == CVal::of(0xaaaaaaaa));
    CHECK(m.well_formed());
}

TEST_CASE("rewriting the same region keeps one cell") {
    CMem m;
    m.write(0x100, 8, CVal::of(1), kShadow);
    m.write(0x100, 8, CVal::of(2), kShadow);
    REQUIRE(m.cells().size() == 1);
    CHECK(m.cells().begin()->second.val == CVal::of(2));
}

TEST_CASE("partially overlapping write stores Top over the union") {
    const Addr r0 = 0x7000;
    CMem m;
    m.write(r0 - 16, 8, CVal::of(1), kShadow);
    m.write(r0 - 12, 8, CVal::of(2), kShadow);
    CHECK(m.well_formed());
    for (Addr a = r0 - 16; a < r0 - 4; a += 4) CHECK(m.read(a, 4, 1).val.is_top());
}

TEST_CASE("random access sequences keep cells disjoint") {
    std::mt19937_64 rng(9);
    CMem m;
    for (int i = 0; i < 2000; ++i) {
        const Word size = Word{1} << (rng() % 4);
        const Addr a = 0x100 + rng() % 64;
        if (rng() % 2) m.write(a, size, CVal::of(rng()), kShadow);
        else m.read(a, size, 1);
        REQUIRE(m.well_formed());
    }
}

TEST_CASE("running example executes to Ret") {
    const Program p = test::corpus("fig2.mir");
    const auto t = run_concrete(p, "main", 7);
    CHECK(t.outcome == ExecutionTrace::Outcome::Returned);
    REQUIRE(t.writes.size() == 4);
    CHECK(t.writes[0].insn == 0x3005);
    CHECK(t.writes[0].cls == MemClass::H);
    CHECK(t.writes[1].cls == MemClass::L);
    CHECK(t.writes[3].cls == MemClass::L);
}

TEST_CASE("runs are deterministic per seed") {
    const Program p = test::corpus("fig2.mir");
    CHECK(trace_jsonl(run_concrete(p, "main", 3)) == trace_jsonl(run_concrete(p, "main", 3)));
}

TEST_CASE("exit and tainted control flow") {
    const Program ex = parse_program("func f @ 0x1 { 0x1: exit }");
    CHECK(run_concrete(ex, "f", 1).outcome == ExecutionTrace::Outcome::Exited);

    const Program bad = parse_program(
        "func f @ 0x1\n"
        "0x1: store [rsp - 0x10, 8] := 0x5 ; jmp 0x2\n"
        "0x2: rax := load [rsp - 0xc, 8] ; jmp 0x3\n"
        "0x3: icall rax -> 0x4\n"
        "0x4: ret\n");
    const auto t = run_concrete(bad, "f", 1);
    CHECK(t.outcome == ExecutionTrace::Outcome::Fault);
    CHECK(t.reason.find("tainted") != std::string::npos);
}

TEST_CASE("Top is absorbing through operations") {
    const Program p = parse_program(
        "func f @ 0x1\n"
        "0x1: store [rsp - 0x10, 8] := 0x5 ; jmp 0x2\n"
        "0x2: rax := load [rsp - 0xc, 8] ; jmp 0x3\n"
        "0x3: rbx := add(rax, 0x1) ; rcx := and(rax, 0x0) ; rdx := xor(rax, rax) ; jmp 0x4\n"
        "0x4: ret\n");
    const auto t = run_concrete(p, "f", 1, {.step_budget = 100, .record_states = true});
    REQUIRE(!t.block_entries.empty());
    const CState& last = t.block_entries.back();
    REQUIRE(last.rip == 0x4);
    CHECK(last.reg(Reg::rbx).is_top());
    CHECK(last.reg(Reg::rcx).is_top());
    CHECK(last.reg(Reg::rdx).is_top());
}

TEST_CASE("step budget") {
    const Program p = parse_program("func f @ 0x1 { 0x1: jmp 0x1 }");
    CHECK(run_concrete(p, "f", 1, {.step_budget = 50}).outcome == ExecutionTrace::Outcome::BudgetExceeded);
}

TEST_CASE("ground-truth classification") {
    const Program p = test::corpus("fig2.mir");
    const Word rsp0 = kStackBase;
    CHECK(classify(p, rsp0, rsp0) == MemClass::L);
    CHECK(classify(p, rsp0, rsp0 - 0x10000) == MemClass::L);
    CHECK(classify(p, rsp0, 0x2010) == MemClass::G);
    CHECK(classify(p, rsp0, kAllocBase + 0x40) == MemClass::H);
}

TEST_CASE("allocator returns disjoint chunks") {
    const Program p = parse_program(
        "extern malloc alloc\nfunc f @ 0x1\n"
        "0x1: call malloc -> 0x2\n0x2: rbx := mov(rax) ; call malloc -> 0x3\n"
        "0x3: store [rax, 8] := 0x1 ; store [rbx, 8] := 0x2 ; ret\n");
    const auto t = run_concrete(p, "f", 4);
    REQUIRE(t.writes.size() == 2);
    CHECK(t.writes[0].cls == MemClass::H);
    CHECK(t.writes[1].cls == MemClass::H);
    const auto d = t.writes[0].write_addr > t.writes[1].write_addr ? t.writes[0].write_addr - t.writes[1].write_addr
                                                                    : t.writes[1].write_addr - t.writes[0].write_addr;
    CHECK(d >= 8);
}

TEST_CASE("trace export is one JSON object per write") {
    const Program p = test::corpus("fig2.mir");
    std::istringstream in(trace_jsonl(run_concrete(p, "main", 1)));
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.contains("addr"));
        CHECK(j.contains("write_addr"));
        CHECK(j.contains("size"));
        CHECK(j.contains("class"));
        ++n;
    }
    CHECK(n == 4);
}
