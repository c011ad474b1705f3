// Copyright (c) Ballpark contributors.
// SPDX-License-Identifier: MIT

#include <catch_amalgamated.hpp>

#include "ballpark/generator.hpp"
#include "ballpark/reports.hpp"
#include "support.hpp"

using namespace ballpark;
using Catch::Matchers::WithinAbs;

namespace {

constexpr MemClass L = MemClass::L, G = MemClass::G, H = MemClass::H;

std::vector<Word> seeds(Word n) {
    std::vector<Word> s;
    for (Word i = 1; i <= n; ++i) s.push_back(i);
    return s;
}

FunctionVerdict verdict_of(const std::string& file, const std::string& entry, const AnalysisConfig& cfg = {}) {
    const Program p = test::corpus(file);
    return check_function(p, analyze(p, entry, cfg), cfg);
}

} // namespace

TEST_CASE("recall formula") {
    CHECK_THAT(*recall({{1, {L, G}}}, {{1, {L}}}), WithinAbs(100.0, 1e-9));
    CHECK_THAT(*recall({{1, {L}}}, {{1, {L, H}}}), WithinAbs(0.0, 1e-9));
    const Designations gt{{1, {L}}, {2, {G}}, {3, {H}}, {4, {L, H}}};
    const Designations pa{{1, {L}}, {2, {G}}, {3, {H}}, {4, {L}}};
    CHECK_THAT(*recall(pa, gt), WithinAbs(75.0, 1e-9));
    CHECK_FALSE(recall({}, {}).has_value());
    // Unanalyzed writes count as unsupported.
    CHECK_THAT(*recall({}, {{1, {L}}}), WithinAbs(0.0, 1e-9));
}

TEST_CASE("precision formula") {
    CHECK(percent(precision({{1, {L, G}}}, {{1, {L}}})) == "66.7");
    CHECK(percent(precision({{1, {L}}, {2, {G}}}, {{1, {L}}, {2, {G}}})) == "100.0");
    CHECK(percent(precision({{1, {L, G, H}}}, {{1, {L}}})) == "33.3");
    CHECK(percent(precision({}, {})) == "undefined");
    // Average of 1 and 1/3.
    CHECK_THAT(*precision({{1, {L}}, {2, {L, G, H}}}, {{1, {L}}, {2, {H}}}), WithinAbs(200.0 / 3.0, 1e-9));
}

TEST_CASE("ground truth") {
    const Program local = parse_program("func f @ 0x1\n0x1: store [rsp - 0x8, 8] := 0x1 ; ret\n");
    const auto gt = ground_truth(local, "f", seeds(1));
    CHECK(gt.classes == Designations{{0x1, {L}}});
    CHECK(gt.runs == 1);

    const Program never = parse_program(
        "func f @ 0x1\n0x1: jmp 0x3\n0x2: store [rsp - 0x8, 8] := 0x1 ; ret\n0x3: ret\n");
    CHECK(ground_truth(never, "f", seeds(4)).classes.empty());

    // A write that lands in the heap or in .data depending on an extern result.
    const Program split = parse_program(
        "section .data 0x2000 0x2fff\nextern getc pure\nextern malloc alloc\nfunc f @ 0x1\n"
        "0x1: call getc -> 0x2\n"
        "0x2: ZF := ult(rax, 0x80) ; cjmp ZF, 0x3, 0x4\n"
        "0x3: rax := mov(0x2000) ; jmp 0x5\n"
        "0x4: call malloc -> 0x5\n"
        "0x5: store [rax, 8] := 0x0 ; ret\n");
    ClassSet expected;
    for (Word s : seeds(16)) {
        for (const auto& w : run_concrete(split, "f", s).writes) {
            const bool in_data = w.write_addr >= 0x2000 && w.write_addr <= 0x2fff;
            expected.insert(in_data ? G : H);
        }
    }
    CHECK(expected == ClassSet{G, H});
    CHECK(ground_truth(split, "f", seeds(16)).classes.at(0x5) == expected);

    const Program faulty = parse_program(
        "func f @ 0x1\n0x1: store [rsp - 0x10, 8] := 0x5 ; jmp 0x2\n"
        "0x2: rax := load [rsp - 0xc, 8] ; jmp 0x3\n0x3: ijmp rax\n");
    const auto all_fault = ground_truth(faulty, "f", seeds(3));
    CHECK(all_fault.faults == 3);
    CHECK(all_fault.classes.empty());
    CHECK_FALSE(all_fault.diagnostic.empty());
}

TEST_CASE("verdicts") {
    CHECK(verdict_of("fig2.mir", "main").kind == FunctionVerdict::Kind::OK);

    const auto top = verdict_of("top_write.mir", "main");
    CHECK(top.kind == FunctionVerdict::Kind::ERR);
    REQUIRE(top.witness.has_value());
    CHECK(*top.witness == 0x4202);

    const auto un = verdict_of("unresolved_safe.mir", "main");
    CHECK(un.kind == FunctionVerdict::Kind::UN);
    CHECK(un.unresolved == std::set<Addr>{0x4303});

    CHECK(exit_code(FunctionVerdict::Kind::OK) == 0);
    CHECK(exit_code(FunctionVerdict::Kind::UN) == 10);
    CHECK(exit_code(FunctionVerdict::Kind::ERR) == 20);
}

TEST_CASE("strict separation never upgrades a verdict") {
    AnalysisConfig strict;
    strict.separation = SeparationMode::Strict;
    for (const auto& g : generate_corpus(40, 13)) {
        const Program p = parse_program(g.text);
        const auto loose = check_function(p, analyze(p, "main"), {});
        const auto tight = check_function(p, analyze(p, "main", strict), strict);
        if (loose.kind == FunctionVerdict::Kind::ERR) CHECK(tight.kind != FunctionVerdict::Kind::OK);
        if (loose.kind != FunctionVerdict::Kind::OK) CHECK(tight.kind != FunctionVerdict::Kind::OK);
    }
    CHECK(verdict_of("push_pop.mir", "main", strict).kind == FunctionVerdict::Kind::ERR);
}

TEST_CASE("callee-saved registers") {
    const Program pp = test::corpus("push_pop.mir");
    const AnalysisConfig cfg;
    const auto saved = callee_saved_check(analyze(pp, "main"), pp, cfg);
    CHECK(saved.at(Reg::rbx));
    CHECK(saved.at(Reg::r12));

    const Program cl = test::corpus("clobber.mir");
    CHECK_FALSE(callee_saved_check(analyze(cl, "main"), cl, cfg).at(Reg::rbx));

    const Program slot = parse_program(
        "func f @ 0x1\n0x1: store [rsp - 0x20, 8] := r13 ; jmp 0x2\n0x2: r13 := mov(rdi) ; jmp 0x3\n"
        "0x3: r13 := load [rsp - 0x20, 8] ; ret\n");
    CHECK(callee_saved_check(analyze(slot, "f"), slot, cfg).at(Reg::r13));
}

TEST_CASE("suspect calls") {
    const Program p = test::corpus("ret2win.mir");
    const AnalysisConfig cfg;
    const auto found = find_suspect_calls(analyze(p, "vuln"), p, cfg);
    REQUIRE(found.size() == 1);
    CHECK(found[0].insn == 0x7005);
    CHECK(found[0].reg == Reg::rdi);
    CHECK(found[0].pointer == "C{rsp_0-0x20}");

    const Program heap = parse_program(
        "extern malloc alloc\nextern memset havoc\nfunc f @ 0x1\n0x1: call malloc -> 0x2\n"
        "0x2: rdi := mov(rax) ; call memset -> 0x3\n0x3: ret\n");
    CHECK(find_suspect_calls(analyze(heap, "f"), heap, cfg).empty());
}

TEST_CASE("report JSON") {
    const Program p = test::corpus("fig2.mir");
    const AnalysisConfig cfg;
    const auto res = analyze(p, "main");
    const auto j = report_json(p, res, cfg, differential(p, "main", res, seeds(8)));
    CHECK(j.at("verdict") == "OK");
    CHECK(j.at("writes").size() == 4);
    CHECK(j.at("recall") == 100.0);
    CHECK(j.contains("precision"));
    CHECK(j.contains("callee_saved"));
    CHECK(j.contains("suspects"));
}
