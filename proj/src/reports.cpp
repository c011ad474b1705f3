// Copyright (c) Ballpark contributors.
// SPDX-License-Identifier: MIT

#include "ballpark/reports.hpp"

#include <cstdio>

#include "ballpark/gamma.hpp"

namespace ballpark {

std::vector<WriteReport> write_reports(const AnalysisResult& res, const Context& ctx, Word frame_cap) {
    std::vector<WriteReport> out;
    for (const auto& w : res.writes) {
        out.push_back({w.insn, w.micro, w.region.render(), designate(w.region.addr, ctx, frame_cap), w.assumed});
    }
    return out;
}

Designations predicted(const AnalysisResult& res, const Context& ctx, Word frame_cap) {
    Designations pa;
    for (const auto& w : res.writes) {
        const ClassSet d = designate(w.region.addr, ctx, frame_cap);
        pa[w.insn].insert(d.begin(), d.end());
    }
    return pa;
}

GroundTruth ground_truth(const Program& p, const std::string& entry, const std::vector<Word>& seeds) {
    GroundTruth gt;
    const Addr f = p.entry(entry);
    for (Word seed : seeds) {
        const ExecutionTrace t = run_concrete(p, entry, seed);
        ++gt.runs;
        if (t.outcome == ExecutionTrace::Outcome::Fault) {
            if (gt.faults++ == 0) gt.diagnostic = t.reason;
        }
        for (const auto& w : t.writes) {
            if (w.function == f) gt.classes[w.insn].insert(w.cls);
        }
    }
    if (gt.runs > 0 && gt.faults == gt.runs) {
        gt.classes.clear();
        gt.diagnostic = "all runs faulted: " + gt.diagnostic;
    }
    return gt;
}

std::optional<double> recall(const Designations& pa, const Designations& gt) {
    if (gt.empty()) return std::nullopt;
    std::size_t ok = 0;
    for (const auto& [a, classes] : gt) {
        auto it = pa.find(a);
        bool covered = it != pa.end();
        for (auto c : classes) covered = covered && it->second.contains(c);
        ok += covered ? 1 : 0;
    }
    return 100.0 * static_cast<double>(ok) / static_cast<double>(gt.size());
}

std::optional<double> precision(const Designations& pa, const Designations& gt) {
    if (gt.empty()) return std::nullopt;
    double sum = 0;
    for (const auto& [a, classes] : gt) {
        std::size_t spurious = 0;
        if (auto it = pa.find(a); it != pa.end()) {
            for (auto c : it->second) spurious += classes.contains(c) ? 0 : 1;
        }
        sum += 1.0 - static_cast<double>(spurious) / 3.0;
    }
    return 100.0 * sum / static_cast<double>(gt.size());
}

std::string verdict_name(FunctionVerdict::Kind k) {
    switch (k) {
    case FunctionVerdict::Kind::OK: return "OK";
    case FunctionVerdict::Kind::UN: return "UN";
    case FunctionVerdict::Kind::ERR: return "ERR";
    }
    return "?";
}

int exit_code(FunctionVerdict::Kind k) {
    switch (k) {
    case FunctionVerdict::Kind::OK: return 0;
    case FunctionVerdict::Kind::UN: return 10;
    case FunctionVerdict::Kind::ERR: return 20;
    }
    return 2;
}

namespace {

bool separate(Verdict v, SeparationMode m) {
    return v == Verdict::Necessary || (v == Verdict::Desirable && m == SeparationMode::AssumeDesirable);
}

} // namespace

FunctionVerdict check_function(const Program& p, const AnalysisResult& res, const AnalysisConfig& cfg) {
    const Domain dom(cfg.domain, Context{&p, res.entry});
    FunctionVerdict v;
    const AbsRegion ret_slot{dom.from_initial(Reg::rsp), 8};

    // Slots holding an untouched callee-saved register.
    struct Spill {
        AbsRegion region;
        Addr insn;
        std::size_t micro;
    };
    std::vector<Spill> spills;
    for (const auto& w : res.writes) {
        if (w.region.addr.layer() != Layer::C || !w.region.size) continue;
        for (Reg r : cfg.callee_saved) {
            if (w.value == dom.from_initial(r)) spills.push_back({w.region, w.insn, w.micro});
        }
    }

    auto fail = [&](const AbsWrite& w) {
        v.kind = FunctionVerdict::Kind::ERR;
        v.witness = w.insn;
        v.witness_region = w.region.render();
    };
    for (const auto& w : res.writes) {
        const Verdict to_ret = dom.sep(w.region, ret_slot);
        if (!separate(to_ret, cfg.separation)) {
            fail(w);
            return v;
        }
        if (to_ret == Verdict::Desirable) v.relied.insert({w.insn, w.region.render(), ret_slot.render()});
        for (const auto& s : spills) {
            if (s.insn == w.insn && s.micro == w.micro) continue;
            const Verdict to_spill = dom.sep(w.region, s.region);
            // Re-spilling an untouched register into the slot is harmless.
            if (dom.alias(w.region, s.region)) {
                bool same_value = false;
                for (Reg r : cfg.callee_saved) same_value = same_value || w.value == dom.from_initial(r);
                if (same_value) continue;
            }
            if (!separate(to_spill, cfg.separation)) {
                fail(w);
                return v;
            }
            if (to_spill == Verdict::Desirable) v.relied.insert({w.insn, w.region.render(), s.region.render()});
        }
    }
    if (!res.unresolved.empty()) {
        v.kind = FunctionVerdict::Kind::UN;
        v.unresolved = res.unresolved;
    }
    return v;
}

std::map<Reg, bool> callee_saved_check(const AnalysisResult& res, const Program& p, const AnalysisConfig& cfg) {
    const Domain dom(cfg.domain, Context{&p, res.entry});
    std::map<Reg, bool> out;
    if (!res.post) return out;
    for (Reg r : cfg.callee_saved) out[r] = res.post->reg(r) == dom.from_initial(r);
    return out;
}

std::vector<SuspectCall> find_suspect_calls(const AnalysisResult& res, const Program& p, const AnalysisConfig& cfg) {
    const Context ctx{&p, res.entry};
    std::vector<SuspectCall> out;
    for (const auto& [a, st] : res.before_terminator) {
        const auto* call = std::get_if<Call>(&p.at(a).term);
        if (call == nullptr || p.extern_model(call->target) == nullptr) continue;
        for (Reg r : cfg.param_regs) {
            if (designate(st.reg(r), ctx, cfg.frame_cap) == ClassSet{MemClass::L}) {
                out.push_back({a, r, st.reg(r).render()});
            }
        }
    }
    return out;
}

DiffResult differential(const Program& p, const std::string& entry, const AnalysisResult& res,
                        const std::vector<Word>& seeds, std::size_t max_violations) {
    DiffResult d;
    const Addr f = p.entry(entry);
    const Context ctx{&p, f};
    d.pa = predicted(res, ctx);
    std::multimap<std::pair<Addr, std::size_t>, const AbsWrite*> abs_writes;
    for (const auto& w : res.writes) abs_writes.emplace(std::pair{w.insn, w.micro}, &w);

    auto violate = [&](Word seed, Addr insn, std::string what) {
        if (d.violations.size() < max_violations) d.violations.push_back({seed, insn, std::move(what)});
    };
    RunOptions opts;
    opts.record_states = true;
    for (Word seed : seeds) {
        const ExecutionTrace t = run_concrete(p, entry, seed, opts);
        ++d.gt.runs;
        if (t.outcome == ExecutionTrace::Outcome::Fault) ++d.gt.faults;
        const GammaEnv env = gamma_env(t);
        for (const auto& w : t.writes) {
            if (w.function != f) continue;
            d.gt.classes[w.insn].insert(w.cls);
            ++d.writes_checked;
            auto [lo, hi] = abs_writes.equal_range({w.insn, w.micro});
            bool covered = false;
            for (auto it = lo; it != hi && !covered; ++it) {
                covered = in_gamma(it->second->region.addr, w.write_addr, w.addr_shadow, env, ctx);
            }
            if (!covered) {
                violate(seed, w.insn,
                        lo == hi ? "write not reached by the analysis"
                                 : "footprint " + hex(w.write_addr) + " (" + w.addr_shadow.render() +
                                       ") outside " + lo->second->region.render());
            }
        }
        for (const auto& s : t.block_entries) {
            if (!s.callstack.empty() || s.function != f) continue;
            ++d.states_checked;
            auto it = res.phi.find(s.rip);
            if (it == res.phi.end()) {
                violate(seed, s.rip, "address reached but not in the invariant map");
                continue;
            }
            for (Reg r : kAllRegs) {
                const CVal& v = s.reg(r);
                if (v.is_top()) continue;
                if (!in_gamma(it->second.reg(r), *v.word, s.shadow(r), env, ctx)) {
                    violate(seed, s.rip,
                            std::string(reg_name(r)) + " = " + s.shadow(r).render() + " outside " +
                                it->second.reg(r).render());
                }
            }
        }
    }
    if (d.gt.runs > 0 && d.gt.faults == d.gt.runs) d.gt.diagnostic = "all runs faulted";
    d.recall = recall(d.pa, d.gt.classes);
    d.precision = precision(d.pa, d.gt.classes);
    return d;
}

std::string percent(std::optional<double> v) {
    if (!v) return "undefined";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", *v);
    return buf;
}

nlohmann::json report_json(const Program& p, const AnalysisResult& res, const AnalysisConfig& cfg,
                           const std::optional<DiffResult>& diff) {
    using nlohmann::json;
    const Context ctx{&p, res.entry};
    json j;
    j["writes"] = json::array();
    for (const auto& w : write_reports(res, ctx, cfg.frame_cap)) {
        j["writes"].push_back({{"addr", hex(w.insn)},
                               {"region", w.region},
                               {"designation", render_classes(w.designation)},
                               {"assumed_desirable", w.assumed}});
    }
    if (diff) {
        j["recall"] = diff->recall ? json(std::stod(percent(diff->recall))) : json(nullptr);
        j["precision"] = diff->precision ? json(std::stod(percent(diff->precision))) : json(nullptr);
    } else {
        j["recall"] = nullptr;
        j["precision"] = nullptr;
    }
    const FunctionVerdict v = check_function(p, res, cfg);
    j["verdict"] = verdict_name(v.kind);
    if (v.witness) j["witness"] = {{"addr", hex(*v.witness)}, {"region", v.witness_region}};
    j["unresolved"] = json::array();
    for (Addr a : res.unresolved) j["unresolved"].push_back(hex(a));
    j["callee_saved"] = json::object();
    for (const auto& [r, ok] : callee_saved_check(res, p, cfg)) j["callee_saved"][std::string(reg_name(r))] = ok;
    j["suspects"] = json::array();
    for (const auto& s : find_suspect_calls(res, p, cfg)) {
        j["suspects"].push_back({{"addr", hex(s.insn)}, {"register", std::string(reg_name(s.reg))}, {"pointer", s.pointer}});
    }
    j["assumptions"] = json::array();
    for (const auto& a : res.assumptions) {
        j["assumptions"].push_back({{"addr", hex(a.insn)}, {"regions", {a.region_a, a.region_b}}});
    }
    if (res.post) {
        json post;
        for (Reg r : kAllRegs) {
            if (!res.post->reg(r).is_top()) post["registers"][std::string(reg_name(r))] = res.post->reg(r).render();
        }
        post["memory"] = json::array();
        for (const auto& m : res.post->mem) post["memory"].push_back({{"region", m.region.render()}, {"value", m.value.render()}});
        j["post"] = post;
    }
    return j;
}

} // namespace ballpark
