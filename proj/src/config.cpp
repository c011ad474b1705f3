// Copyright (c) Ballpark contributors.
// SPDX-License-Identifier: MIT

#include "ballpark/config.hpp"

#include <fstream>
#include <sstream>

namespace ballpark {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::size_t number(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const unsigned long long n = std::stoull(v, &used, 0);
        if (used != v.size()) throw std::invalid_argument(v);
        return n;
    } catch (const std::exception&) {
        throw ConfigError("bad number for " + key + ": " + v);
    }
}

std::size_t positive(const std::string& key, const std::string& v) {
    const std::size_t n = number(key, v);
    if (n == 0) throw ConfigError(key + " must be positive");
    return n;
}

} // namespace

void apply_config(RunConfig& cfg, std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string val = trim(std::string_view(line).substr(eq + 1));
        auto& a = cfg.analysis;
        if (key == "mode") {
            const auto m = mode_from_name(val);
            if (!m) throw ConfigError("unknown mode " + val);
            a.domain.mode = *m;
        } else if (key == "cap_c") {
            a.domain.cap_c = positive(key, val);
        } else if (key == "cap_b") {
            a.domain.cap_b = positive(key, val);
        } else if (key == "cap_s") {
            a.domain.cap_s = positive(key, val);
        } else if (key == "separation") {
            if (val == "desirable") a.separation = SeparationMode::AssumeDesirable;
            else if (val == "strict") a.separation = SeparationMode::Strict;
            else throw ConfigError("unknown separation " + val);
        } else if (key == "alloc_alloc") {
            if (val == "necessary") a.domain.alloc_alloc = Verdict::Necessary;
            else if (val == "desirable") a.domain.alloc_alloc = Verdict::Desirable;
            else throw ConfigError("unknown alloc_alloc " + val);
        } else if (key == "frame_cap") {
            a.frame_cap = positive(key, val);
        } else if (key == "step_budget") {
            a.step_budget = positive(key, val);
        } else if (key == "seeds") {
            cfg.seeds = positive(key, val);
        } else if (key == "param_regs") {
            a.param_regs.clear();
            std::istringstream regs(val);
            std::string r;
            while (std::getline(regs, r, ',')) {
                const auto reg = reg_from_name(trim(r));
                if (!reg) throw ConfigError("unknown register " + trim(r));
                a.param_regs.push_back(*reg);
            }
        } else {
            throw ConfigError("unknown key " + key);
        }
    }
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    RunConfig cfg;
    apply_config(cfg, ss.str());
    return cfg;
}

} // namespace ballpark
