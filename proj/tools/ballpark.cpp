// Copyright (c) Ballpark contributors.
// SPDX-License-Identifier: MIT

// ballpark analyze|difftest|obligations|gen|check

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "ballpark/absint.hpp"
#include "ballpark/config.hpp"
#include "ballpark/generator.hpp"
#include "ballpark/obligations.hpp"
#include "ballpark/reports.hpp"

using namespace ballpark;
using nlohmann::json;

namespace {

constexpr int kExitIo = 2;

struct Options {
    std::string file;
    std::string config_path;
    std::string domain;
    std::string entry;
    std::string out;
    bool json_out{false};
    bool strict{false};
    std::size_t seeds{0};
};

struct Loaded {
    Program program;
    std::string entry;
    RunConfig cfg;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig make_config(const Options& o) {
    RunConfig cfg = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
    if (!o.domain.empty()) {
        auto m = mode_from_name(o.domain);
        if (!m) throw ConfigError("unknown domain: " + o.domain);
        cfg.analysis.domain.mode = *m;
    }
    if (o.strict) cfg.analysis.separation = SeparationMode::Strict;
    if (o.seeds) cfg.seeds = o.seeds;
    return cfg;
}

Loaded load(const Options& o) {
    Loaded l{parse_program(read_file(o.file)), o.entry, make_config(o)};
    if (l.entry.empty()) {
        if (l.program.entries.empty()) throw std::runtime_error("program declares no functions");
        l.entry = l.program.entries.contains("main") ? "main" : l.program.entries.begin()->first;
    }
    if (!l.program.entries.contains(l.entry)) throw std::runtime_error("unknown entry: " + l.entry);
    return l;
}

void emit(const Options& o, const std::string& text) {
    if (o.out.empty()) {
        std::cout << text << "\n";
        return;
    }
    std::ofstream f(o.out);
    if (!f) throw std::runtime_error("cannot write " + o.out);
    f << text << "\n";
}

std::vector<Word> seed_list(std::size_t n) {
    std::vector<Word> s(n);
    std::iota(s.begin(), s.end(), Word{1});
    return s;
}

std::string text_report(const Program& p, const AnalysisResult& res, const AnalysisConfig& cfg) {
    std::ostringstream os;
    auto v = check_function(p, res, cfg);
    os << "verdict: " << verdict_name(v.kind);
    if (v.witness) os << " at " << hex(*v.witness) << " " << v.witness_region;
    for (Addr a : v.unresolved) os << " unresolved " << hex(a);
    os << "\n";
    Context ctx{&p, res.entry};
    for (const auto& w : write_reports(res, ctx, cfg.frame_cap))
        os << "write " << hex(w.insn) << " " << w.region << " " << render_classes(w.designation)
           << (w.assumed ? " (assumed)" : "") << "\n";
    for (const auto& a : res.assumptions)
        os << "assume " << hex(a.insn) << " " << a.region_a << " # " << a.region_b << "\n";
    for (const auto& [r, ok] : callee_saved_check(res, p, cfg))
        os << "callee-saved " << reg_name(r) << " " << (ok ? "preserved" : "clobbered") << "\n";
    for (const auto& s : find_suspect_calls(res, p, cfg))
        os << "suspect " << hex(s.insn) << " " << reg_name(s.reg) << " " << s.pointer << "\n";
    if (res.post) os << "post:\n" << res.post->render();
    return os.str();
}

int cmd_analyze(const Options& o) {
    auto l = load(o);
    auto res = analyze(l.program, l.entry, l.cfg.analysis);
    auto v = check_function(l.program, res, l.cfg.analysis);
    if (o.json_out) emit(o, report_json(l.program, res, l.cfg.analysis).dump(2));
    else emit(o, text_report(l.program, res, l.cfg.analysis));
    return exit_code(v.kind);
}

int cmd_check(const Options& o) {
    auto l = load(o);
    auto res = analyze(l.program, l.entry, l.cfg.analysis);
    auto v = check_function(l.program, res, l.cfg.analysis);
    json j;
    j["verdict"] = verdict_name(v.kind);
    json cs = json::object();
    for (const auto& [r, ok] : callee_saved_check(res, l.program, l.cfg.analysis)) cs[std::string(reg_name(r))] = ok;
    j["callee_saved"] = cs;
    j["suspects"] = json::array();
    for (const auto& s : find_suspect_calls(res, l.program, l.cfg.analysis))
        j["suspects"].push_back({{"insn", hex(s.insn)}, {"reg", reg_name(s.reg)}, {"pointer", s.pointer}});
    if (o.json_out) {
        emit(o, j.dump(2));
    } else {
        std::ostringstream os;
        os << "verdict: " << verdict_name(v.kind) << "\n";
        for (const auto& [r, ok] : cs.items()) os << "callee-saved " << r << " " << (ok ? "preserved" : "clobbered") << "\n";
        for (const auto& s : j["suspects"])
            os << "suspect " << s["insn"].get<std::string>() << " " << s["reg"].get<std::string>() << " "
               << s["pointer"].get<std::string>() << "\n";
        emit(o, os.str());
    }
    return exit_code(v.kind);
}

int cmd_difftest(const Options& o) {
    auto l = load(o);
    auto res = analyze(l.program, l.entry, l.cfg.analysis);
    auto d = differential(l.program, l.entry, res, seed_list(l.cfg.seeds));
    bool all_fault = d.gt.runs > 0 && d.gt.faults == d.gt.runs;
    if (o.json_out) {
        emit(o, report_json(l.program, res, l.cfg.analysis, d).dump(2));
    } else {
        std::ostringstream os;
        os << "runs " << d.gt.runs << " faults " << d.gt.faults << "\n";
        if (all_fault) os << d.gt.diagnostic << "\n";
        os << "recall " << percent(d.recall) << " precision " << percent(d.precision) << "\n";
        for (const auto& [a, gt] : d.gt.classes) {
            auto it = d.pa.find(a);
            os << hex(a) << " observed " << render_classes(gt) << " predicted "
               << (it == d.pa.end() ? std::string("-") : render_classes(it->second)) << "\n";
        }
        for (const auto& v : d.violations) os << "violation seed " << v.seed << " at " << hex(v.insn) << ": " << v.what << "\n";
        emit(o, os.str());
    }
    bool full_recall = d.recall && *d.recall >= 100.0;
    return full_recall && d.violations.empty() && !all_fault ? 0 : 1;
}

int cmd_obligations(const Options& o, std::size_t budget, std::uint64_t seed) {
    RunConfig cfg = make_config(o);
    std::vector<DomainMode> modes;
    if (o.domain.empty()) modes = {DomainMode::Full, DomainMode::OnlyC, DomainMode::OnlyB, DomainMode::OnlyS};
    else modes = {cfg.analysis.domain.mode};
    bool ok = true;
    json j = json::object();
    std::ostringstream os;
    for (DomainMode m : modes) {
        auto r = check_obligations(m, budget, seed);
        ok = ok && r.passed();
        j[std::string(mode_name(m))] = r.to_json();
        for (const auto& res : r.results) {
            os << mode_name(m) << " " << res.name << " " << res.cases << " cases, " << res.failures << " failures\n";
            if (res.first_counterexample) os << "  counterexample: " << *res.first_counterexample << "\n";
        }
        for (const auto& e : r.exhausted) os << mode_name(m) << " " << e << " sampler exhausted\n";
    }
    emit(o, o.json_out ? j.dump(2) : os.str());
    return ok ? 0 : 1;
}

int cmd_gen(std::size_t count, std::uint64_t seed, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& g : generate_corpus(count, seed)) {
        std::ofstream f(std::filesystem::path(dir) / (g.name + ".mir"));
        if (!f) throw std::runtime_error("cannot write into " + dir);
        f << g.text;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ballpark pointer analysis"};
    app.require_subcommand(1);
    Options o;
    std::size_t budget = 10000;
    std::size_t count = 100;
    std::uint64_t seed = 1;
    std::string gen_dir = "generated";

    auto common = [&](CLI::App* c, bool with_file) {
        if (with_file) c->add_option("file", o.file, "Program file")->required();
        c->add_option("--config", o.config_path, "key=value configuration file");
        c->add_option("--domain", o.domain, "full|C|B|S");
        c->add_option("--entry", o.entry, "Function to analyze");
        c->add_option("--out", o.out, "Write output to a file");
        c->add_flag("--json", o.json_out, "Machine-readable output");
        c->add_flag("--strict-separation", o.strict, "Treat desirable separations as overlaps");
        c->add_option("--seeds", o.seeds, "Number of concrete seeds");
    };
    auto* analyze_cmd = app.add_subcommand("analyze", "Analyze one function and report its verdict");
    common(analyze_cmd, true);
    auto* diff_cmd = app.add_subcommand("difftest", "Compare the analysis against concrete runs");
    common(diff_cmd, true);
    auto* check_cmd = app.add_subcommand("check", "Calling-convention and return-address checks");
    common(check_cmd, true);
    auto* obl_cmd = app.add_subcommand("obligations", "Property-test the domain obligations");
    common(obl_cmd, false);
    obl_cmd->add_option("--budget", budget, "Cases per obligation");
    obl_cmd->add_option("--seed", seed, "Sampler seed");
    auto* gen_cmd = app.add_subcommand("gen", "Generate a corpus of programs");
    gen_cmd->add_option("--count", count, "Number of programs");
    gen_cmd->add_option("--seed", seed, "Generator seed");
    gen_cmd->add_option("--out", gen_dir, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitIo;
    }

    try {
        if (*analyze_cmd) return cmd_analyze(o);
        if (*diff_cmd) return cmd_difftest(o);
        if (*check_cmd) return cmd_check(o);
        if (*obl_cmd) return cmd_obligations(o, budget, seed);
        if (*gen_cmd) return cmd_gen(count, seed, gen_dir);
    } catch (const ParseError& e) {
        std::cerr << o.file << ":" << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitIo;
}
