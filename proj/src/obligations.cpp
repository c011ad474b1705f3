// Copyright (c) Ballpark contributors.
// SPDX-License-Identifier: MIT

#include "ballpark/obligations.hpp"

#include <algorithm>
#include <map>
#include <random>

#include "ballpark/gamma.hpp"

namespace ballpark {

Contract contract_of(const Domain& d) {
    return {
        [&d](const AbsPtr& a, const AbsPtr& b) { return d.join(a, b); },
        [&d](Operation op, const std::vector<AbsPtr>& args) { return d.asem(op, args); },
        [&d](const AbsRegion& a, const AbsRegion& b) { return d.sep(a, b); },
        [&d](const AbsRegion& a, const AbsRegion& b) { return d.encl(a, b); },
        [&d](const SymExpr& e) { return d.from_expr(e); },
    };
}

const std::vector<std::string>& obligation_names() {
    static const std::vector<std::string> names{
        "join_overapproximates",   "necessary_sep_disjoint", "asem_overapproximates", "sep_join_monotone",
        "join_encloses",           "encl_sep_transfer",      "join_commutative",      "join_associative",
        "join_idempotent",         "encl_reflexive",         "encl_transitive",       "sep_symmetric",
    };
    return names;
}

bool ObligationReport::passed() const {
    return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.failures == 0; });
}

const ObligationResult* ObligationReport::find(const std::string& name) const {
    for (const auto& r : results) {
        if (r.name == name) return &r;
    }
    return nullptr;
}

void ObligationReport::merge(const ObligationReport& o) {
    for (const auto& r : o.results) {
        auto it = std::find_if(results.begin(), results.end(), [&](const auto& x) { return x.name == r.name; });
        if (it == results.end()) {
            results.push_back(r);
            continue;
        }
        it->cases += r.cases;
        it->failures += r.failures;
        if (!it->first_counterexample) it->first_counterexample = r.first_counterexample;
    }
    for (const auto& e : o.exhausted) {
        if (std::find(exhausted.begin(), exhausted.end(), e) == exhausted.end()) exhausted.push_back(e);
    }
}

nlohmann::json ObligationReport::to_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : results) {
        j.push_back({{"name", r.name},
                     {"cases", r.cases},
                     {"failures", r.failures},
                     {"first_counterexample", r.first_counterexample ? nlohmann::json(*r.first_counterexample)
                                                                     : nlohmann::json(nullptr)}});
    }
    return {{"obligations", j}, {"exhausted", exhausted}, {"passed", passed()}};
}

namespace {

constexpr char kKitProgram[] = R"(section .data 0x2000 0x2fff
section .bss 0x4000 0x4fff
symbol table 0x8000 0x100
extern getc pure
extern rand pure
extern malloc alloc
func main @ 0x3000
0x3000: call malloc -> 0x3001
0x3001: call malloc -> 0x3002
0x3002: call getc -> 0x3003
0x3003: call rand -> 0x3004
0x3004: ret
)";

constexpr Addr kFunction = 0x3000;
constexpr std::array<Addr, 2> kAllocSites{0x3000, 0x3001};
constexpr std::array<Addr, 1> kForeignAlloc{0x9000};

SymExpr plus(SymExpr e, std::int64_t d) {
    if (d == 0) return e;
    return SymExpr::make_app(Operation::add, {std::move(e), SymExpr::imm(static_cast<Word>(d))});
}

// Computations whose values are members of some abstract value.
std::vector<SymExpr> member_pool() {
    std::vector<SymExpr> pool;
    const SymExpr rsp0 = SymExpr::initial(Reg::rsp);
    for (std::int64_t d = -0x40; d <= 0x10; d += 4) pool.push_back(plus(rsp0, d));
    for (Reg r : {Reg::rdi, Reg::rsi}) {
        for (std::int64_t d = 0; d <= 0x20; d += 8) pool.push_back(plus(SymExpr::initial(r), d));
    }
    for (Addr site : kAllocSites) {
        for (std::int64_t d = 0; d <= 0x30; d += 8) pool.push_back(plus(SymExpr::alloc(site), d));
    }
    pool.push_back(SymExpr::alloc(kForeignAlloc[0]));
    for (Word k = 0; k < 6; ++k) {
        pool.push_back(SymExpr::imm(0x2000 + 8 * k));
        pool.push_back(SymExpr::imm(0x4000 + 8 * k));
        pool.push_back(SymExpr::imm(0x8000 + 8 * k));
    }
    pool.push_back(SymExpr::imm(0x40));
    pool.push_back(SymExpr::leaf(Atom::fun("getc", 0x3002)));
    pool.push_back(SymExpr::leaf(Atom::fun("rand", 0x3003)));
    pool.push_back(plus(SymExpr::leaf(Atom::mem_init("[rsp_0-0x8,8]")), 8));
    pool.push_back(SymExpr::make_app(Operation::add, {SymExpr::initial(Reg::rdi), SymExpr::initial(Reg::rsi)}));
    return pool;
}

DomainConfig config_for(DomainMode mode) {
    DomainConfig cfg;
    cfg.mode = mode;
    return cfg;
}

struct Sample {
    Env env;
    GammaEnv genv;
};

class Kit {
  public:
    Kit(DomainMode mode, std::uint64_t seed, Mutation mutation)
        : program_(parse_program(kKitProgram)), ctx_{&program_, kFunction},
          domain_(config_for(mode), ctx_), rng_(seed), pool_(member_pool()) {
        contract_ = contract_of(domain_);
        if (mutation == Mutation::IntersectJoin) {
            contract_.join = [](const AbsPtr& a, const AbsPtr& b) {
                if (a.layer() == Layer::C && b.layer() == Layer::C) {
                    std::set<SymExpr> both;
                    for (const auto& e : a.c_set())
                        if (b.c_set().contains(e)) both.insert(e);
                    if (!both.empty()) return AbsPtr::c(std::move(both));
                    return AbsPtr::c({*b.c_set().begin()});
                }
                return b;
            };
        }
        if (mutation == Mutation::NecessarySep) {
            contract_.sep = [](const AbsRegion&, const AbsRegion&) { return Verdict::Necessary; };
        }
        for (const auto& n : obligation_names()) report_.results.push_back({n, 0, 0, std::nullopt});
    }

    ObligationReport run(std::size_t budget) {
        std::size_t attempts = 0;
        while (!all_reached(budget) && attempts < 40 * budget) {
            ++attempts;
            one_round(budget);
        }
        for (const auto& r : report_.results) {
            if (r.cases < budget) report_.exhausted.push_back(r.name);
        }
        return report_;
    }

  private:
    bool all_reached(std::size_t budget) const {
        return std::all_of(report_.results.begin(), report_.results.end(),
                           [&](const auto& r) { return r.cases >= budget; });
    }

    ObligationResult& result(const std::string& name) {
        for (auto& r : report_.results) {
            if (r.name == name) return r;
        }
        throw std::logic_error("unknown obligation " + name);
    }

    void check(const std::string& name, std::size_t budget, bool ok, const std::function<std::string()>& why) {
        ObligationResult& r = result(name);
        if (r.cases >= budget) return;
        ++r.cases;
        if (ok) return;
        ++r.failures;
        if (!r.first_counterexample) r.first_counterexample = why();
    }

    Word pick(Word n) { return std::uniform_int_distribution<Word>(0, n - 1)(rng_); }

    Sample sample_env() {
        Sample s;
        auto bind = [&](const Atom& a, Word v) {
            s.env.values[a] = v;
            s.genv.values[a] = {v};
        };
        bind(Atom::initial(Reg::rsp), 0x7ff000000000 + pick(0x1000) * 0x10);
        bind(Atom::initial(Reg::rdi), 0x500000000000 + pick(0x100000) * 8);
        bind(Atom::initial(Reg::rsi), 0x500000000000 + pick(0x100000) * 8);
        bind(Atom::mem_init("[rsp_0-0x8,8]"), 0x500000000000 + pick(0x100000) * 8);
        Word chunk = 0x600000000000 + pick(4) * 0x1000;
        for (Addr site : kAllocSites) {
            bind(Atom::alloc(site), chunk);
            chunk += 0x1000;
        }
        bind(Atom::alloc(kForeignAlloc[0]), chunk);
        // Each external function's results live in an object of its own.
        bind(Atom::fun("getc", 0x3002), 0x700000000000 + pick(0x100) * 8);
        bind(Atom::fun("rand", 0x3003), 0x710000000000 + pick(0x100) * 8);
        return s;
    }

    AbsPtr sample_ptr() {
        const Word roll = pick(20);
        if (roll == 0) return AbsPtr::top();
        AbsPtr p = contract_.lift(pool_[pick(pool_.size())]);
        const Word extra = roll < 8 ? 0 : roll < 14 ? 1 : roll < 18 ? 3 : 12;
        for (Word i = 0; i < extra; ++i) p = contract_.join(p, contract_.lift(pool_[pick(pool_.size())]));
        if (pick(8) == 0) p = domain_.normalize(domain_.shift(p));
        return p;
    }

    std::optional<Word> sample_size() {
        static constexpr std::array<Word, 4> sizes{1, 2, 4, 8};
        if (pick(4) == 0) return std::nullopt;
        return sizes[pick(sizes.size())];
    }

    AbsRegion region(AbsPtr p, std::optional<Word> si) {
        if (p.layer() != Layer::C) si.reset();
        return {std::move(p), si};
    }

    struct Member {
        SymExpr e;
        Word value;
    };

    std::vector<Member> members(const AbsPtr& p, const Sample& s) {
        std::vector<Member> out;
        for (const auto& e : pool_) {
            const auto v = evaluate(e, s.env);
            if (v && in_gamma(p, *v, e, s.genv, ctx_)) out.push_back({e, *v});
        }
        return out;
    }

    bool disjoint(Word a, Word sa, Word b, Word sb) const { return a + sa <= b || b + sb <= a; }

    void one_round(std::size_t budget) {
        const Sample s = sample_env();
        const AbsPtr a0 = sample_ptr();
        const AbsPtr a1 = sample_ptr();
        const AbsPtr a2 = sample_ptr();
        const AbsPtr j01 = contract_.join(a0, a1);
        const auto m0 = members(a0, s);
        const auto m1 = members(a1, s);

        // (1) membership survives the join.
        if (!m0.empty()) {
            const Member& m = m0[pick(m0.size())];
            check("join_overapproximates", budget, in_gamma(j01, m.value, m.e, s.genv, ctx_), [&] {
                return m.e.render() + " in " + a0.render() + " but not in " + a0.render() + " join " +
                       a1.render() + " = " + j01.render();
            });
        }

        const auto si0 = sample_size();
        const auto si1 = sample_size();
        const AbsRegion r0 = region(a0, si0);
        const AbsRegion r1 = region(a1, si1);
        const Verdict v01 = contract_.sep(r0, r1);

        // (2) necessary separation implies disjoint footprints.
        if (v01 == Verdict::Necessary && !m0.empty() && !m1.empty()) {
            const Member& x = m0[pick(m0.size())];
            const Member& y = m1[pick(m1.size())];
            const Word sx = r0.size.value_or(8);
            const Word sy = r1.size.value_or(8);
            check("necessary_sep_disjoint", budget, disjoint(x.value, sx, y.value, sy), [&] {
                return r0.render() + " and " + r1.render() + " judged necessarily separate, but " + x.e.render() +
                       " and " + y.e.render() + " overlap";
            });
        }

        // (3) abstract operations cover concrete results.
        if (!m0.empty() && !m1.empty()) {
            static constexpr std::array<Operation, 6> ops{Operation::add, Operation::sub, Operation::and_,
                                                          Operation::xor_, Operation::mul, Operation::shl};
            const Operation op = ops[pick(ops.size())];
            const Member& x = m0[pick(m0.size())];
            const Member& y = m1[pick(m1.size())];
            const SymExpr e = SymExpr::make_app(op, {x.e, y.e});
            const AbsPtr r = contract_.asem(op, {a0, a1});
            if (const auto v = evaluate(e, s.env)) {
                check("asem_overapproximates", budget, in_gamma(r, *v, e, s.genv, ctx_), [&] {
                    return e.render() + " not in asem(" + std::string(op_name(op)) + ", " + a0.render() + ", " +
                           a1.render() + ") = " + r.render();
                });
            }
        }

        // (4) a region separate from a joined region is separate from its parts.
        {
            const AbsRegion joined = region(j01, si0);
            const AbsRegion part = region(a0, si0);
            const AbsRegion other = region(a2, si1);
            const Verdict vj = contract_.sep(other, joined);
            const Verdict vp = contract_.sep(other, part);
            check("sep_join_monotone", budget, vp >= vj, [&] {
                return other.render() + " vs " + joined.render() + " is " + std::string(verdict_name(vj)) +
                       " but vs " + part.render() + " is " + std::string(verdict_name(vp));
            });
        }

        // (5) a value's region is enclosed by the joined region.
        {
            const AbsRegion part = region(a0, si0);
            const AbsRegion joined = region(j01, si0);
            check("join_encloses", budget, contract_.encl(part, joined),
                  [&] { return part.render() + " not enclosed by " + joined.render(); });
        }

        // (6) separation transfers to enclosed regions.
        {
            const AbsRegion inner = region(a0, si0);
            const AbsRegion outer = region(j01, si0);
            const AbsRegion other = region(a2, si1);
            if (contract_.encl(inner, outer)) {
                const Verdict vo = contract_.sep(outer, other);
                const Verdict vi = contract_.sep(inner, other);
                check("encl_sep_transfer", budget, vi >= vo, [&] {
                    return inner.render() + " within " + outer.render() + ": " + std::string(verdict_name(vo)) +
                           " against " + other.render() + " weakens to " + std::string(verdict_name(vi));
                });
            }
        }

        // Algebraic laws.
        const AbsPtr j10 = contract_.join(a1, a0);
        check("join_commutative", budget, j01 == j10,
              [&] { return a0.render() + " , " + a1.render() + ": " + j01.render() + " vs " + j10.render(); });
        const AbsPtr left = contract_.join(j01, a2);
        const AbsPtr right = contract_.join(a0, contract_.join(a1, a2));
        check("join_associative", budget, left == right,
              [&] { return a0.render() + " , " + a1.render() + " , " + a2.render() + ": " + left.render() + " vs " +
                           right.render(); });
        const AbsPtr self = contract_.join(a0, a0);
        check("join_idempotent", budget, self == a0, [&] { return a0.render() + " join itself = " + self.render(); });
        check("encl_reflexive", budget, contract_.encl(r0, r0), [&] { return r0.render(); });
        {
            const AbsRegion mid = region(j01, si0);
            const AbsRegion top = region(contract_.join(j01, a2), si0);
            if (contract_.encl(r0, mid) && contract_.encl(mid, top)) {
                check("encl_transitive", budget, contract_.encl(r0, top),
                      [&] { return r0.render() + " within " + mid.render() + " within " + top.render(); });
            }
        }
        const Verdict v10 = contract_.sep(r1, r0);
        check("sep_symmetric", budget, v01 == v10, [&] {
            return r0.render() + " vs " + r1.render() + ": " + std::string(verdict_name(v01)) + " / " +
                   std::string(verdict_name(v10));
        });
    }

    Program program_;
    Context ctx_;
    Domain domain_;
    std::mt19937_64 rng_;
    std::vector<SymExpr> pool_;
    Contract contract_;
    ObligationReport report_;
};

} // namespace

ObligationReport check_obligations(DomainMode mode, std::size_t budget, std::uint64_t seed, Mutation mutation) {
    Kit kit(mode, seed, mutation);
    return kit.run(budget);
}

} // namespace ballpark
