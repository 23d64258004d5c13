// hte_sim: batch front end for the zero-CATE and GATES Monte Carlo studies.
//
//   hte_sim simulate zero-cate [--config PATH] [--workers N] [--seed U64]
//                              [--replications N] [--output DIR] [--format csv|markdown]
//   hte_sim simulate gates     [same flags]
//   hte_sim report RAW.csv     [--config PATH] [--format csv|markdown]
//
// Flags override config-file keys, which override built-in defaults.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hte/config.hpp"
#include "hte/report.hpp"
#include "hte/simulator.hpp"

#ifndef HTE_VERSION
#define HTE_VERSION "unknown"
#endif

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<int> workers;
    std::optional<std::uint64_t> seed;
    std::optional<int> replications;
    std::optional<std::string> output;
    std::optional<std::string> format;
    std::optional<std::string> cate;
    std::vector<std::string> overrides;
};

void add_common_flags(CLI::App* app, CommonFlags& f, bool run_flags) {
    app->add_option("--config", f.config_path, "Run configuration file")->check(CLI::ExistingFile);
    app->add_option("--format", f.format, "Report format (csv|markdown)");
    app->add_option("--set", f.overrides, "Override one key, e.g. --set dgp.d=5 (repeatable)");
    if (!run_flags) return;
    app->add_option("--workers", f.workers, "Worker threads (0 = all cores)");
    app->add_option("--seed", f.seed, "Master seed");
    app->add_option("--replications", f.replications, "Monte Carlo replications");
    app->add_option("--output", f.output, "Output directory");
    app->add_option("--cate", f.cate, "CATE design (zero|rectified_z1)");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw hte::ConfigError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

hte::RunConfig load_config(const CommonFlags& f) {
    hte::RunConfig cfg = f.config_path.empty() ? hte::parse_config("") : hte::parse_config(read_file(f.config_path));
    for (const auto& kv : f.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw hte::ConfigError("--set expects key=value, got '" + kv + "'");
        hte::apply_override(cfg, hte::detail::trim(kv.substr(0, eq)), hte::detail::trim(kv.substr(eq + 1)));
    }
    if (f.workers) hte::apply_override(cfg, "study.workers", std::to_string(*f.workers));
    if (f.seed) hte::apply_override(cfg, "study.master_seed", std::to_string(*f.seed));
    if (f.replications) hte::apply_override(cfg, "study.replications", std::to_string(*f.replications));
    if (f.output) hte::apply_override(cfg, "output.dir", *f.output);
    if (f.format) hte::apply_override(cfg, "output.format", *f.format);
    if (f.cate) hte::apply_override(cfg, "dgp.cate", *f.cate);
    return cfg;
}

hte::ReportContext context_for(const hte::RunConfig& cfg, hte::StudyKind kind) {
    return {kind, cfg.study.dgp.cate, cfg.study.multisplit.splits, cfg.study.mining ? cfg.study.mining->F : 0};
}

/// Writes to a sibling temporary file and renames it into place, so a failed
/// run never leaves a partial report behind.
void write_atomically(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << content;
        if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

int run_simulation(hte::StudyKind kind, const CommonFlags& flags) {
    const hte::RunConfig cfg = load_config(flags);
    const std::string stem = kind == hte::StudyKind::ZeroCate ? "zero_cate" : "gates";
    fs::create_directories(cfg.output_dir);

    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(hte::config_hash(cfg)));
    std::cerr << "hte_sim " << HTE_VERSION << "  study=" << stem << "  config_hash=" << hash
              << "  master_seed=" << cfg.study.master_seed << '\n'
              << cfg.describe();

    const auto start = std::chrono::steady_clock::now();
    const hte::StudyOutcome out =
        kind == hte::StudyKind::ZeroCate ? hte::run_zero_cate_study(cfg.study) : hte::run_gates_study(cfg.study);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const std::string report = hte::emit_report(out.summary, context_for(cfg, kind), cfg.format);
    std::ostringstream raw;
    hte::write_raw_csv(raw, out.records);
    std::ostringstream log;
    log << "version = " << HTE_VERSION << "\nstudy = " << stem << "\nconfig_hash = " << hash
        << "\nmaster_seed = " << cfg.study.master_seed << "\nwall_seconds = " << wall << "\n\n"
        << cfg.describe();

    const fs::path dir(cfg.output_dir);
    write_atomically(dir / (stem + "_raw.csv"), raw.str());
    write_atomically(dir / (stem + (cfg.format == hte::ReportFormat::Csv ? "_report.csv" : "_report.md")), report);
    write_atomically(dir / (stem + "_run.log"), log.str());
    std::cout << report;
    std::cerr << "wall time " << wall << " s\n";
    return 0;
}

int run_report(const std::string& raw_path, const CommonFlags& flags) {
    const hte::RunConfig cfg = load_config(flags);
    std::ifstream in(raw_path);
    if (!in) throw hte::ConfigError("cannot read '" + raw_path + "'");
    const auto records = hte::read_raw_csv(in);
    const hte::StudyKind kind = hte::infer_study_kind(records);
    const double delta_true = kind == hte::StudyKind::Gates ? hte::oracle_gates_delta(cfg.study.dgp.cate) : 0.0;

    std::vector<std::string> order;
    for (const auto& r : records)
        if (std::find(order.begin(), order.end(), r.method) == order.end()) order.push_back(r.method);
    const hte::StudySummary summary = hte::summarize(records, cfg.study.alpha, delta_true, order);
    std::cout << hte::emit_report(summary, context_for(cfg, kind), cfg.format);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo studies of single- versus multi-split inference on heterogeneous treatment effects"};
    app.set_version_flag("--version", std::string(HTE_VERSION));
    app.require_subcommand(1);

    CommonFlags zero_flags, gates_flags, report_flags;
    std::string raw_path;

    auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo study");
    simulate->require_subcommand(1);
    auto* zero = simulate->add_subcommand("zero-cate", "Size/power of the zero-CATE tests");
    auto* gates = simulate->add_subcommand("gates", "Bias/SD/MAD/size of GATES-difference estimators");
    add_common_flags(zero, zero_flags, true);
    add_common_flags(gates, gates_flags, true);

    auto* report = app.add_subcommand("report", "Re-derive a report from a raw-record CSV");
    report->add_option("raw", raw_path, "Raw-record CSV written by `simulate`")->required()->check(CLI::ExistingFile);
    add_common_flags(report, report_flags, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*zero) return run_simulation(hte::StudyKind::ZeroCate, zero_flags);
        if (*gates) return run_simulation(hte::StudyKind::Gates, gates_flags);
        if (*report) return run_report(raw_path, report_flags);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
