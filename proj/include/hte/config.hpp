#pragma once

// Run configuration: a flat key-value document with sections dgp, learner,
// study, multisplit, mining and output. Keys may be written either as
// `section.key = value` or as `key = value` under a `[section]` header.
// Comments start with '#' or ';'. Unknown keys are errors.

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hte/errors.hpp"
#include "hte/simulator.hpp"

namespace hte {

enum class ReportFormat { Csv, Markdown };

inline std::string_view to_string(ReportFormat f) { return f == ReportFormat::Csv ? "csv" : "markdown"; }

inline ReportFormat parse_report_format(std::string_view s) {
    if (s == "csv") return ReportFormat::Csv;
    if (s == "markdown") return ReportFormat::Markdown;
    throw ConfigError("format must be one of {csv, markdown}, got '" + std::string(s) + "'");
}

struct RunConfig {
    StudyConfig study;
    std::string output_dir = ".";
    ReportFormat format = ReportFormat::Markdown;
    /// Fully qualified keys that were set explicitly (file or flag).
    std::set<std::string> explicit_keys;

    /// Every key with its effective value, one `key = value` per line, in a
    /// fixed order; keys left at their default are marked.
    [[nodiscard]] std::string describe() const;
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <class Int>
Int parse_integer(const std::string& key, const std::string& v) {
    Int out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double out = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size()) throw ConfigError(key + ": expected a real number, got '" + v + "'");
    return out;
}

inline bool parse_switch(const std::string& key, const std::string& v) {
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    throw ConfigError(key + ": expected on|off, got '" + v + "'");
}

inline std::string format_real(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

struct KeyHandler {
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

inline const std::vector<std::pair<std::string, KeyHandler>>& key_table() {
    using std::string;
    static const std::vector<std::pair<string, KeyHandler>> table = {
        {"dgp.n", {[](RunConfig& c, const string& v) { c.study.dgp.n = parse_integer<int>("dgp.n", v); },
                   [](const RunConfig& c) { return std::to_string(c.study.dgp.n); }}},
        {"dgp.d", {[](RunConfig& c, const string& v) { c.study.dgp.d = parse_integer<int>("dgp.d", v); },
                   [](const RunConfig& c) { return std::to_string(c.study.dgp.d); }}},
        {"dgp.cate", {[](RunConfig& c, const string& v) { c.study.dgp.cate = parse_cate(v); },
                      [](const RunConfig& c) { return string(to_string(c.study.dgp.cate)); }}},
        {"dgp.baseline_scale",
         {[](RunConfig& c, const string& v) { c.study.dgp.baseline_scale = parse_real("dgp.baseline_scale", v); },
          [](const RunConfig& c) { return format_real(c.study.dgp.baseline_scale); }}},
        {"dgp.noise_sd", {[](RunConfig& c, const string& v) { c.study.dgp.noise_sd = parse_real("dgp.noise_sd", v); },
                          [](const RunConfig& c) { return format_real(c.study.dgp.noise_sd); }}},
        {"dgp.propensity",
         {[](RunConfig& c, const string& v) { c.study.dgp.propensity = parse_real("dgp.propensity", v); },
          [](const RunConfig& c) { return format_real(c.study.dgp.propensity); }}},
        {"learner.learner", {[](RunConfig& c, const string& v) { c.study.learner.kind = parse_learner_kind(v); },
                             [](const RunConfig& c) { return string(to_string(c.study.learner.kind)); }}},
        {"learner.ridge_penalty",
         {[](RunConfig& c, const string& v) {
              c.study.learner.ridge_penalty = parse_real("learner.ridge_penalty", v);
          },
          [](const RunConfig& c) { return format_real(c.study.learner.ridge_penalty); }}},
        {"learner.basis_degree",
         {[](RunConfig& c, const string& v) {
              c.study.learner.basis_degree = parse_integer<int>("learner.basis_degree", v);
          },
          [](const RunConfig& c) { return std::to_string(c.study.learner.basis_degree); }}},
        {"learner.k", {[](RunConfig& c, const string& v) { c.study.learner.k = parse_integer<int>("learner.k", v); },
                       [](const RunConfig& c) { return std::to_string(c.study.learner.k); }}},
        {"study.replications",
         {[](RunConfig& c, const string& v) { c.study.replications = parse_integer<int>("study.replications", v); },
          [](const RunConfig& c) { return std::to_string(c.study.replications); }}},
        {"study.first_replication",
         {[](RunConfig& c, const string& v) {
              c.study.first_replication = parse_integer<std::uint64_t>("study.first_replication", v);
          },
          [](const RunConfig& c) { return std::to_string(c.study.first_replication); }}},
        {"study.alpha", {[](RunConfig& c, const string& v) { c.study.alpha = parse_real("study.alpha", v); },
                         [](const RunConfig& c) { return format_real(c.study.alpha); }}},
        {"study.master_seed",
         {[](RunConfig& c, const string& v) { c.study.master_seed = parse_integer<std::uint64_t>("study.master_seed", v); },
          [](const RunConfig& c) { return std::to_string(c.study.master_seed); }}},
        {"study.workers", {[](RunConfig& c, const string& v) { c.study.workers = parse_integer<int>("study.workers", v); },
                           [](const RunConfig& c) { return std::to_string(c.study.workers); }}},
        {"study.methods",
         {[](RunConfig& c, const string& v) {
              c.study.methods.clear();
              if (v == "default") return;
              for (const auto& name : split_list(v)) c.study.methods.push_back(parse_method(name));
          },
          [](const RunConfig& c) {
              string out;
              for (Method m : c.study.methods) out += (out.empty() ? "" : ",") + string(to_string(m));
              return out.empty() ? string("default") : out;
          }}},
        {"study.folds", {[](RunConfig& c, const string& v) { c.study.folds = parse_integer<int>("study.folds", v); },
                         [](const RunConfig& c) { return std::to_string(c.study.folds); }}},
        {"study.train_ratio",
         {[](RunConfig& c, const string& v) { c.study.train_ratio = parse_real("study.train_ratio", v); },
          [](const RunConfig& c) { return format_real(c.study.train_ratio); }}},
        {"study.crossfit_folds",
         {[](RunConfig& c, const string& v) { c.study.crossfit_folds = parse_integer<int>("study.crossfit_folds", v); },
          [](const RunConfig& c) { return std::to_string(c.study.crossfit_folds); }}},
        {"multisplit.splits",
         {[](RunConfig& c, const string& v) { c.study.multisplit.splits = parse_integer<int>("multisplit.splits", v); },
          [](const RunConfig& c) { return std::to_string(c.study.multisplit.splits); }}},
        {"multisplit.alpha",
         {[](RunConfig& c, const string& v) { c.study.multisplit.alpha = parse_real("multisplit.alpha", v); },
          [](const RunConfig& c) { return format_real(c.study.multisplit.alpha); }}},
        {"multisplit.double_median",
         {[](RunConfig& c, const string& v) {
              c.study.multisplit.double_median = parse_switch("multisplit.double_median", v);
          },
          [](const RunConfig& c) { return string(c.study.multisplit.double_median ? "on" : "off"); }}},
        {"multisplit.per_split_level",
         {[](RunConfig& c, const string& v) {
              if (v == "half") c.study.multisplit.per_split_level = PerSplitLevel::Half;
              else if (v == "full") c.study.multisplit.per_split_level = PerSplitLevel::Full;
              else throw ConfigError("multisplit.per_split_level: expected half|full, got '" + v + "'");
          },
          [](const RunConfig& c) {
              return string(c.study.multisplit.per_split_level == PerSplitLevel::Half ? "half" : "full");
          }}},
        {"mining.mining_f",
         {[](RunConfig& c, const string& v) {
              if (!c.study.mining) c.study.mining = MiningConfig{};
              c.study.mining->F = parse_integer<int>("mining.mining_f", v);
          },
          [](const RunConfig& c) { return c.study.mining ? std::to_string(c.study.mining->F) : string("off"); }}},
        {"mining.mine_by",
         {[](RunConfig& c, const string& v) {
              if (!c.study.mining) c.study.mining = MiningConfig{};
              c.study.mining->mine_by = parse_mine_by(v);
          },
          [](const RunConfig& c) {
              return c.study.mining ? string(to_string(c.study.mining->mine_by)) : string("off");
          }}},
        {"output.dir", {[](RunConfig& c, const string& v) { c.output_dir = v; },
                        [](const RunConfig& c) { return c.output_dir; }}},
        {"output.format", {[](RunConfig& c, const string& v) { c.format = parse_report_format(v); },
                           [](const RunConfig& c) { return string(to_string(c.format)); }}},
    };
    return table;
}

inline const KeyHandler* find_key(const std::string& key) {
    for (const auto& [name, handler] : key_table())
        if (name == key) return &handler;
    return nullptr;
}

inline void validate_run_config(const RunConfig& c) {
    c.study.validate();
    if (c.output_dir.empty()) throw ConfigError("output.dir must not be empty");
}

}  // namespace detail

inline std::string RunConfig::describe() const {
    std::string out;
    for (const auto& [name, handler] : detail::key_table()) {
        out += name + " = " + handler.get(*this);
        if (!explicit_keys.contains(name)) out += "  # default";
        out += '\n';
    }
    return out;
}

/// Sets one fully qualified key, e.g. ("study.alpha", "0.1"), and revalidates.
inline void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
    const auto* handler = detail::find_key(key);
    if (!handler) throw ConfigError("unknown key '" + key + "'");
    handler->set(cfg, value);
    cfg.explicit_keys.insert(key);
    detail::validate_run_config(cfg);
}

/// Parses a configuration document, applies defaults and validates.
/// Errors carry the offending line number.
inline RunConfig parse_config(std::string_view text) {
    static const std::set<std::string> sections = {"dgp", "learner", "study", "multisplit", "mining", "output"};
    RunConfig cfg;
    std::string section;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto context = [&](const std::string& msg) {
            return ConfigError("line " + std::to_string(line_no) + ": " + msg);
        };
        std::string line = raw;
        if (const auto c = line.find_first_of("#;"); c != std::string::npos) line.erase(c);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw context("malformed section header '" + line + "'");
            section = detail::trim(std::string_view(line).substr(1, line.size() - 2));
            if (!sections.contains(section)) throw context("unknown section '" + section + "'");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw context("expected 'key = value', got '" + line + "'");
        std::string key = detail::trim(std::string_view(line).substr(0, eq));
        const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
        if (key.find('.') == std::string::npos) {
            if (section.empty()) throw context("key '" + key + "' outside any section");
            key = section + "." + key;
        }
        const auto* handler = detail::find_key(key);
        if (!handler) throw context("unknown key '" + key + "'");
        try {
            handler->set(cfg, value);
        } catch (const ConfigError& e) {
            throw context(e.what());
        }
        cfg.explicit_keys.insert(key);
    }
    try {
        detail::validate_run_config(cfg);
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("invalid configuration: ") + e.what());
    }
    return cfg;
}

/// FNV-1a hash of the canonical description, used to tag run logs.
inline std::uint64_t config_hash(const RunConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [name, handler] : detail::key_table()) {
        for (char ch : name + "=" + handler.get(cfg) + "\n") {
            h ^= static_cast<unsigned char>(ch);
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

}  // namespace hte
