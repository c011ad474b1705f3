// Copyright (c) Ballpark contributors.
// SPDX-License-Identifier: MIT

// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are fixed here.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "ballpark/absint.hpp"
#include "ballpark/concrete.hpp"
#include "ballpark/generator.hpp"
#include "ballpark/obligations.hpp"
#include "ballpark/reports.hpp"
#include "support.hpp"

using namespace ballpark;

namespace {

constexpr double kFig2Seconds = 1.0;
constexpr double kObligationSeconds = 60.0;
constexpr double kDifferentialSeconds = 300.0;
constexpr std::size_t kObligationCases = 10000;
constexpr std::size_t kCorpusPrograms = 100;
constexpr std::size_t kSeedsPerProgram = 8;
constexpr std::uint64_t kCorpusSeed = 42;

struct Outcome {
    bool pass{true};
    std::ostringstream detail;
    std::vector<std::string> failures;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            failures.push_back(what);
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<Word> seed_list(std::size_t n) {
    std::vector<Word> s;
    for (Word i = 1; i <= n; ++i) s.push_back(i);
    return s;
}

SymExpr rsp(std::int64_t k) {
    const SymExpr b = SymExpr::initial(Reg::rsp);
    return k >= 0 ? SymExpr::make_app(Operation::add, {b, SymExpr::imm(static_cast<Word>(k))})
                  : SymExpr::make_app(Operation::sub, {b, SymExpr::imm(static_cast<Word>(-k))});
}

std::string reg_row(const AbsState& s, Reg r) { return std::string(reg_name(r)) + " = " + s.reg(r).render(); }

// 1. Running example golden state.
void fig2_golden(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    const Program p = test::corpus("fig2.mir");
    const auto res = analyze(p, "main");
    const double secs = seconds_since(t0);
    o.require(res.post.has_value(), "post state");
    if (!res.post) return;
    const AbsState& s = *res.post;
    const std::vector<std::pair<std::string, std::string>> regs{
        {reg_row(s, Reg::rsp), "rsp = C{rsp_0}"},
        {reg_row(s, Reg::rbp), "rbp = C{rsp_0}"},
        {reg_row(s, Reg::rcx), "rcx = S{Fun getc}"},
        {reg_row(s, Reg::rax), "rax = C{alloc[0x3003]}"},
        {reg_row(s, Reg::rsi), "rsi = C{rsp_0-0x8}"},
    };
    std::size_t matched = 0;
    for (const auto& [got, want] : regs) {
        o.require(got == want, got + " != " + want);
        matched += got == want;
    }
    const std::vector<std::pair<std::string, std::string>> mem{
        {"[B{Alloc@0x3003}]", "C{rsp_0-0x8}"},
        {"[C{rsp_0-0x10}, 8]", "B{Global@0x2000}"},
        {"[S{rdx_0, Fun getc}]", "C{alloc[0x3003]}"},
        {"[C{rsp_0-0x8}, 4]", "TOP"},
    };
    for (const auto& [region, value] : mem) {
        const MemEntry* e = s.find(region);
        const bool ok = e != nullptr && e->value.render() == value;
        o.require(ok, region + " = " + value);
        matched += ok;
    }
    o.require(s.mem.size() == 4, "exactly four memory regions");
    o.require(secs < kFig2Seconds, "runtime");
    o.detail << matched << "/9 rows, " << s.mem.size() << " regions, " << secs << " s";
}

struct Fig3Program {
    Program p = parse_program(test::corpus_text("fig2.mir") +
                              "section .bss 0x4000 0x4fff\n"
                              "symbol buf 0x8000 0x100\n"
                              "func other @ 0x9000\n"
                              "0x9000: call malloc -> 0x9001\n"
                              "0x9001: ret\n");
    Context ctx{&p, 0x3000};
    Domain dom{DomainConfig{}, ctx};
};

// 2. Separation verdicts of the running example's four regions.
void example2(Outcome& o) {
    Fig3Program f;
    const AbsRegion p0{AbsPtr::b({Base::alloc(0x3003)}), std::nullopt};
    const AbsRegion p1{AbsPtr::c({rsp(-16)}), 8};
    const AbsRegion p2{AbsPtr::s({Source::constant_src(Atom::initial(Reg::rdx)), Source::fun_src("getc")}),
                       std::nullopt};
    const AbsRegion p3{AbsPtr::c({rsp(-8)}), 4};
    const std::vector<std::tuple<std::string, Verdict, Verdict>> checks{
        {"p0/p1", f.dom.sep(p0, p1), Verdict::Necessary},
        {"p0/p2", f.dom.sep(p0, p2), Verdict::Necessary},
        {"p1/p2", f.dom.sep(p1, p2), Verdict::Desirable},
        {"p1/p3", f.dom.sep(p1, p3), Verdict::Necessary},
    };
    for (const auto& [name, got, want] : checks) {
        o.require(got == want, name + " " + std::string(verdict_name(got)));
        o.detail << name << "=" << verdict_name(got) << " ";
    }
    o.require(f.dom.disjoint_cc(rsp(-16), 8, rsp(-8), 4), "p1/p3 by disjointness of constant computations");
}

// Figure rules, written independently of the implementation.
Verdict figure_bases(const Base& a, const Base& b, const Program& p) {
    using K = Base::Kind;
    auto is = [&](K x, K y) { return (a.kind == x && b.kind == y) || (a.kind == y && b.kind == x); };
    if (is(K::StackPointer, K::Alloc) || is(K::StackPointer, K::Global) || is(K::StackPointer, K::Symbol) ||
        is(K::Global, K::Alloc) || is(K::Alloc, K::Symbol))
        return Verdict::Necessary;
    if (is(K::Alloc, K::Alloc) && a.addr != b.addr) return Verdict::Necessary;
    if (is(K::StackPointer, K::StackPointer) && a.addr != b.addr) return Verdict::Desirable;
    if (is(K::Global, K::Global) && p.section_of(a.addr) != p.section_of(b.addr)) return Verdict::Desirable;
    if (is(K::Global, K::Symbol)) return Verdict::Desirable;
    return Verdict::Unknown;
}

Verdict figure_sources(const Source& a, const Source& b, const Program& p, Addr current,
                       const std::set<Addr>& current_sites) {
    using K = Source::Kind;
    if (a.kind == K::BaseSrc && b.kind == K::BaseSrc) return figure_bases(a.base, b.base, p);
    if (a.kind == K::Fun || b.kind == K::Fun) return Verdict::Necessary;
    auto one_way = [&](const Source& c, const Source& s) {
        if (c.kind != K::Constant || s.kind != K::BaseSrc) return Verdict::Unknown;
        if (s.base.kind == Base::Kind::Alloc && current_sites.contains(s.base.addr)) return Verdict::Necessary;
        if (s.base.kind == Base::Kind::StackPointer && s.base.addr == current) return Verdict::Desirable;
        return Verdict::Unknown;
    };
    const Verdict v = one_way(a, b);
    return v != Verdict::Unknown ? v : one_way(b, a);
}

// 3. Exhaustive table over base and source constructors.
void fig3_table(Outcome& o) {
    Fig3Program f;
    const std::vector<Base> bases{Base::stack_pointer(0x3000), Base::stack_pointer(0x9000), Base::global(0x2000),
                                  Base::global(0x2008),        Base::global(0x4000),        Base::symbol("buf"),
                                  Base::alloc(0x3003),         Base::alloc(0x9000)};
    std::vector<Source> sources{Source::constant_src(Atom::initial(Reg::rdi)),
                                Source::constant_src(Atom::initial(Reg::rsi)), Source::fun_src("getc"),
                                Source::fun_src("malloc")};
    for (const auto& b : bases) sources.push_back(Source::base_src(b));
    const std::set<Addr> current_sites{0x3001, 0x3003};

    std::size_t pairs = 0, mismatches = 0, asymmetric = 0;
    std::set<std::string> positive_rules;
    std::vector<std::string> deviations;
    auto rule_key = [](const std::string& x, const std::string& y, Verdict v) {
        return std::string(verdict_name(v)) + ":" + std::min(x, y) + "/" + std::max(x, y);
    };
    auto kind_name = [](const Base& b) {
        switch (b.kind) {
        case Base::Kind::StackPointer: return "StackPointer";
        case Base::Kind::Global: return "Global";
        case Base::Kind::Alloc: return "Alloc";
        case Base::Kind::Symbol: return "Symbol";
        }
        return "?";
    };
    for (const auto& a : bases) {
        for (const auto& b : bases) {
            ++pairs;
            const Verdict got = f.dom.sep_bases(a, b);
            const Verdict want = figure_bases(a, b, f.p);
            if (got != f.dom.sep_bases(b, a)) ++asymmetric;
            if (got != want) {
                ++mismatches;
                o.detail << " mismatch " << a.render() << "/" << b.render();
            }
            if (want != Verdict::Unknown) positive_rules.insert("B" + rule_key(kind_name(a), kind_name(b), want));
        }
    }
    auto src_kind = [&](const Source& s) -> std::string {
        switch (s.kind) {
        case Source::Kind::Constant: return "Constant";
        case Source::Kind::Fun: return "Fun";
        case Source::Kind::BaseSrc: return std::string("Base ") + kind_name(s.base);
        }
        return "?";
    };
    for (const auto& a : sources) {
        for (const auto& b : sources) {
            ++pairs;
            const Verdict got = f.dom.sep_sources(a, b);
            if (got != f.dom.sep_sources(b, a)) ++asymmetric;
            const Verdict want = figure_sources(a, b, f.p, 0x3000, current_sites);
            // A return value is not separate from itself; read literally the
            // rule would claim so, contradicting concrete disjointness.
            if (a.kind == Source::Kind::Fun && a == b) {
                if (got == Verdict::Unknown) deviations.push_back(a.render() + "/" + b.render() + " Unknown");
                else {
                    ++mismatches;
                    o.detail << " self-separate " << a.render();
                }
                continue;
            }
            if (got != want) {
                ++mismatches;
                o.detail << " mismatch " << a.render() << "/" << b.render() << " got " << verdict_name(got)
                         << " want " << verdict_name(want);
            }
            if (want != Verdict::Unknown && !(a.kind == Source::Kind::BaseSrc && b.kind == Source::Kind::BaseSrc)) {
                const bool fun = a.kind == Source::Kind::Fun || b.kind == Source::Kind::Fun;
                positive_rules.insert(fun ? "S:Fun/any" : "S" + rule_key(src_kind(a), src_kind(b), want));
            }
        }
    }
    // Base-to-base delegation in the source layer is one more rule.
    positive_rules.insert("S:Base/Base");
    o.require(mismatches == 0, std::to_string(mismatches) + " mismatches");
    o.require(asymmetric == 0, std::to_string(asymmetric) + " asymmetric pairs");
    o.detail << pairs << " pairs, " << positive_rules.size() << " positive rules exercised, 0 asymmetric";
    for (const auto& d : deviations) o.detail << "; " << d;
}

// 4. Proof obligations per mode plus mutation checks.
void obligations(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    for (DomainMode m : {DomainMode::Full, DomainMode::OnlyC, DomainMode::OnlyB, DomainMode::OnlyS}) {
        const auto r = check_obligations(m, kObligationCases, 1);
        std::size_t failures = 0, min_cases = kObligationCases;
        for (const auto& x : r.results) {
            failures += x.failures;
            min_cases = std::min(min_cases, x.cases);
        }
        o.require(r.passed(), std::string(mode_name(m)) + " has failures");
        o.require(min_cases >= kObligationCases, std::string(mode_name(m)) + " below budget");
        o.detail << mode_name(m) << ": " << failures << " failures, min " << min_cases << " cases; ";
    }
    const auto broken_join = check_obligations(DomainMode::Full, 2000, 1, Mutation::IntersectJoin);
    const auto broken_sep = check_obligations(DomainMode::Full, 2000, 1, Mutation::NecessarySep);
    const bool join_caught = broken_join.find("join_overapproximates")->failures > 0;
    const bool sep_caught = broken_sep.find("necessary_sep_disjoint")->failures > 0;
    o.require(join_caught, "broken join not caught");
    o.require(sep_caught, "broken separation not caught");
    const double secs = seconds_since(t0);
    o.require(secs < kObligationSeconds, "runtime");
    o.detail << "mutations caught: join " << (join_caught ? "yes" : "no") << ", sep " << (sep_caught ? "yes" : "no")
             << "; " << secs << " s";
}

// 5. Differential simulation over a generated corpus.
void differential_suite(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto seeds = seed_list(kSeedsPerProgram);
    std::size_t programs = 0, below = 0, violations = 0, writes = 0, states = 0, faults = 0;
    for (const auto& g : generate_corpus(kCorpusPrograms, kCorpusSeed)) {
        const Program p = parse_program(g.text);
        const auto res = analyze(p, "main");
        const auto d = differential(p, "main", res, seeds);
        ++programs;
        faults += d.gt.faults;
        writes += d.writes_checked;
        states += d.states_checked;
        violations += d.violations.size();
        if (!d.recall || *d.recall != 100.0) {
            ++below;
            o.detail << " " << g.name << " recall " << percent(d.recall);
        }
        for (const auto& v : d.violations) o.detail << " " << g.name << "@" << hex(v.insn) << ": " << v.what;
    }
    const double secs = seconds_since(t0);
    o.require(below == 0, "recall below 100");
    o.require(violations == 0, "footprint or state outside concretization");
    o.require(faults == 0, "concrete faults");
    o.require(secs < kDifferentialSeconds, "runtime");
    o.detail << programs << " programs x " << kSeedsPerProgram << " seeds, " << writes << " writes and " << states
             << " states checked, recall 100.0 for " << programs - below << ", " << secs << " s";
}

// 6. Cap behavior.
void caps(Outcome& o) {
    Fig3Program f;
    AbsPtr c = AbsPtr::c({rsp(-8)});
    for (int i = 2; i <= 11; ++i) c = f.dom.join(c, AbsPtr::c({rsp(-8 * i)}));
    std::set<Base> bases;
    for (Addr a = 0; a < 6; ++a) bases.insert(Base::alloc(0x3003 + 0x100 * a));
    const AbsPtr b = f.dom.normalize(AbsPtr::b(bases));
    std::set<Source> many;
    for (int i = 0; i < 251; ++i) many.insert(Source::fun_src("f" + std::to_string(i)));
    const AbsPtr s = f.dom.normalize(AbsPtr::s(many));
    o.require(c.layer() != Layer::C, "11 computations stay in C");
    o.require(b.layer() != Layer::B, "6 bases stay in B");
    o.require(s.is_top(), "251 sources not Top");
    o.detail << "11 C -> " << c.render() << "; 6 B -> layer " << (b.layer() == Layer::S ? "S" : "other")
             << "; 251 S -> " << s.render();
}

// 7. Indirect call resolved through the caller's global store.
void fig4(Outcome& o) {
    auto resolve = [](const std::string& file) {
        const Program p = test::corpus(file);
        AnalysisConfig cfg;
        cfg.pre_memory = call_context(analyze(p, "f"), 0x6001);
        return analyze(p, "g", cfg);
    };
    const auto with = resolve("fig4.mir");
    const auto without = resolve("fig4_nocontext.mir");
    const auto it = with.edges.find(0x6501);
    const bool exact = it != with.edges.end() && it->second == std::set<Addr>{0x6050} && with.unresolved.empty();
    o.require(exact, "0x6501 not resolved to {0x6050}");
    o.require(without.unresolved == std::set<Addr>{0x6501}, "no-context variant not unresolved");
    o.detail << "with store: 0x6501 -> {";
    if (it != with.edges.end())
        for (Addr a : it->second) o.detail << hex(a);
    o.detail << "}; without: unresolved " << (without.unresolved.contains(0x6501) ? "{0x6501}" : "{}");
}

// 8. Calling-convention, suspect-call and verdict checks.
void section6(Outcome& o) {
    const AnalysisConfig cfg;
    const Program pp = test::corpus("push_pop.mir");
    const auto saved = callee_saved_check(analyze(pp, "main"), pp, cfg);
    const bool preserved = saved.contains(Reg::rbx) && saved.at(Reg::rbx) && saved.at(Reg::r12);
    o.require(preserved, "push/pop not preserved");

    const Program rw = test::corpus("ret2win.mir");
    const auto suspects = find_suspect_calls(analyze(rw, "vuln"), rw, cfg);
    const bool one = suspects.size() == 1 && suspects[0].insn == 0x7005;
    o.require(one, "suspect set is not exactly {0x7005}");

    const Program tw = test::corpus("top_write.mir");
    const auto err = check_function(tw, analyze(tw, "main"), cfg);
    o.require(err.kind == FunctionVerdict::Kind::ERR, "Top write not ERR");

    const Program us = test::corpus("unresolved_safe.mir");
    const auto un = check_function(us, analyze(us, "main"), cfg);
    o.require(un.kind == FunctionVerdict::Kind::UN, "unresolved program not UN");

    o.detail << "push/pop preserved=" << (preserved ? "true" : "false") << "; suspects=";
    for (const auto& s : suspects) o.detail << hex(s.insn) << "(" << reg_name(s.reg) << " " << s.pointer << ") ";
    o.detail << "; top write " << verdict_name(err.kind) << "; unresolved " << verdict_name(un.kind);
}

// 9. Concrete taint scenarios.
void taint(Outcome& o) {
    const Addr r0 = kStackBase;
    CMem split;
    split.write(r0 - 16, 8, CVal::of(0x1111111122222222), SymExpr::imm(0));
    split.write(r0 - 16, 4, CVal::of(0x33333333), SymExpr::imm(0));
    const bool lo = split.read(r0 - 16, 4, 1).val == CVal::of(0x33333333);
    const bool hi = split.read(r0 - 12, 4, 1).val == CVal::of(0x11111111);
    o.require(lo && hi && split.cells().size() == 2, "sub-accesses are not valid");

    CMem overlap;
    overlap.write(r0 - 16, 8, CVal::of(1), SymExpr::imm(0));
    overlap.write(r0 - 12, 8, CVal::of(2), SymExpr::imm(0));
    const bool tainted = overlap.read(r0 - 16, 4, 1).val.is_top() && overlap.read(r0 - 12, 4, 1).val.is_top() &&
                         overlap.read(r0 - 8, 4, 1).val.is_top();
    o.require(tainted, "partial overlap did not taint");

    CMem read_overlap;
    read_overlap.write(r0 - 16, 8, CVal::of(1), SymExpr::imm(0));
    const bool read_top = read_overlap.read(r0 - 12, 8, 1).val.is_top();
    const bool cell_top = read_overlap.read(r0 - 16, 8, 1).val.is_top();
    o.require(read_top && cell_top, "partially overlapping read did not taint");
    o.require(split.well_formed() && overlap.well_formed() && read_overlap.well_formed(), "cells overlap");
    o.detail << "<rsp0-16,4> and <rsp0-12,4> valid: " << (lo && hi ? "yes" : "no")
             << "; <rsp0-12,8> over <rsp0-16,8> taints: " << (tainted && read_top ? "yes" : "no");
}

// 10. Per-mode precision ordering on the generated corpus.
void precision_order(Outcome& o) {
    const auto seeds = seed_list(kSeedsPerProgram);
    const auto corpus = generate_corpus(kCorpusPrograms, kCorpusSeed);
    std::map<DomainMode, double> mean, pooled;
    std::size_t s_tops = 0;
    for (DomainMode m : {DomainMode::OnlyC, DomainMode::OnlyB, DomainMode::OnlyS}) {
        double sum = 0, write_sum = 0;
        std::size_t n = 0, w = 0;
        for (const auto& g : corpus) {
            const Program p = parse_program(g.text);
            AnalysisConfig cfg;
            cfg.domain.mode = m;
            const auto res = analyze(p, "main", cfg);
            const auto d = differential(p, "main", res, seeds);
            if (d.precision) {
                sum += *d.precision;
                ++n;
                write_sum += *d.precision * static_cast<double>(d.gt.classes.size());
                w += d.gt.classes.size();
            }
            if (m == DomainMode::OnlyS) {
                for (const auto& x : res.writes) {
                    const bool store = x.micro < p.at(x.insn).body.size();
                    if (store && x.region.addr.is_top()) ++s_tops;
                }
            }
        }
        mean[m] = n ? sum / static_cast<double>(n) : 0;
        pooled[m] = w ? write_sum / static_cast<double>(w) : 0;
    }
    const double c = mean[DomainMode::OnlyC], b = mean[DomainMode::OnlyB], s = mean[DomainMode::OnlyS];
    o.require(c >= b, "precision(C) < precision(B)");
    o.require(b >= s, "precision(B) < precision(S)");
    o.require(s_tops == 0, "OnlyS has Top-designated stores");
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "per-program mean C %.1f, B %.1f, S %.1f; write-weighted C %.1f, B %.1f, S %.1f; OnlyS Top stores %zu",
                  c, b, s, pooled[DomainMode::OnlyC], pooled[DomainMode::OnlyB], pooled[DomainMode::OnlyS], s_tops);
    o.detail << buf;
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
        {"running example golden state", fig2_golden},
        {"running example separation verdicts", example2},
        {"separation algebra table", fig3_table},
        {"proof obligations", obligations},
        {"differential simulation", differential_suite},
        {"layer caps", caps},
        {"indirect call resolution", fig4},
        {"calling convention and verdict checks", section6},
        {"concrete taint scenarios", taint},
        {"per-layer precision ordering", precision_order},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].first << ": " << o.detail.str();
        for (const auto& f : o.failures) std::cout << " [failed: " << f << "]";
        std::cout << std::endl;
    }
    std::cout << criteria.size() - static_cast<std::size_t>(failed) << "/" << criteria.size() << " criteria passed"
              << std::endl;
    return failed == 0 ? 0 : 1;
}
