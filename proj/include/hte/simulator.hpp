#pragma once

// Replication engine for the zero-CATE and GATES studies.
//
// Replication r draws its dataset from SeedKey::data(master, r) and runs
// every requested method with procedure keys rooted at (master, r, 0, 0).
// Workers fill pre-sized per-replication slots and the summary is computed
// from records sorted by (method, replication), so results do not depend on
// the worker count or scheduling.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_set>
#include <vector>

#include "hte/cate_tests.hpp"
#include "hte/dgp.hpp"
#include "hte/errors.hpp"
#include "hte/gates.hpp"
#include "hte/learners.hpp"
#include "hte/mining.hpp"
#include "hte/multisplit.hpp"
#include "hte/rng.hpp"

namespace hte {

enum class Method {
    Naive,
    Twofold,
    Sequential,
    NaiveMultisplit,
    TwofoldMultisplit,
    SequentialMultisplit,
    ImliStyle,
    Cddf,
    ImliStyleMined,
    CddfMined,
};

inline constexpr std::array<Method, 10> kAllMethods = {
    Method::Naive,     Method::Twofold, Method::Sequential,     Method::NaiveMultisplit, Method::TwofoldMultisplit,
    Method::SequentialMultisplit, Method::ImliStyle, Method::Cddf, Method::ImliStyleMined, Method::CddfMined,
};

inline std::string_view to_string(Method m) {
    switch (m) {
        case Method::Naive: return "naive";
        case Method::Twofold: return "twofold";
        case Method::Sequential: return "sequential";
        case Method::NaiveMultisplit: return "naive_multisplit";
        case Method::TwofoldMultisplit: return "twofold_multisplit";
        case Method::SequentialMultisplit: return "sequential_multisplit";
        case Method::ImliStyle: return "imli_style";
        case Method::Cddf: return "cddf";
        case Method::ImliStyleMined: return "imli_style_mined";
        case Method::CddfMined: return "cddf_mined";
    }
    return "?";
}

inline Method parse_method(std::string_view s) {
    for (Method m : kAllMethods)
        if (to_string(m) == s) return m;
    throw ConfigError("unknown method '" + std::string(s) + "'");
}

inline bool is_zero_cate_method(Method m) { return static_cast<int>(m) <= static_cast<int>(Method::SequentialMultisplit); }
inline bool is_multisplit(Method m) {
    return m == Method::NaiveMultisplit || m == Method::TwofoldMultisplit || m == Method::SequentialMultisplit ||
           m == Method::Cddf || m == Method::CddfMined;
}
inline bool is_mined(Method m) { return m == Method::ImliStyleMined || m == Method::CddfMined; }

enum class StudyKind { ZeroCate, Gates };

inline std::vector<Method> default_methods(StudyKind kind) {
    if (kind == StudyKind::ZeroCate)
        return {Method::Naive, Method::Twofold, Method::Sequential,
                Method::NaiveMultisplit, Method::TwofoldMultisplit, Method::SequentialMultisplit};
    return {Method::ImliStyle, Method::Cddf, Method::ImliStyleMined, Method::CddfMined};
}

struct StudyConfig {
    DgpConfig dgp;
    LearnerSpec learner;
    int replications = 1000;
    /// Index of the first replication; disjoint ranges can be run separately and merged.
    std::uint64_t first_replication = 0;
    std::vector<Method> methods;
    MultisplitConfig multisplit;
    std::optional<MiningConfig> mining = MiningConfig{};
    double alpha = 0.05;
    std::uint64_t master_seed = 20240601;
    /// 0 picks std::thread::hardware_concurrency().
    int workers = 1;
    /// Folds for the naive and sequential tests.
    int folds = 3;
    double train_ratio = 2.0 / 3.0;
    /// Cross-fitting folds for the single-split GATES estimator.
    int crossfit_folds = 3;

    void validate() const {
        dgp.validate();
        learner.validate();
        multisplit.validate();
        if (mining) mining->validate();
        if (replications < 1) throw ConfigError("study.replications must be >= 1");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("study.alpha must lie in (0,1)");
        if (workers < 0) throw ConfigError("study.workers must be >= 0");
        if (folds < 2) throw ConfigError("study.folds must be >= 2");
        if (crossfit_folds < 2) throw ConfigError("study.crossfit_folds must be >= 2");
        if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw ConfigError("study.train_ratio must lie in (0,1)");
        for (Method m : methods)
            if (is_mined(m) && !mining) throw ConfigError("mined methods need a mining configuration");
    }
};

/// One (replication, method) outcome. For zero-CATE tests `estimate` is the
/// test statistic and the se/CI columns are NaN.
struct RawRecord {
    std::uint64_t replication = 0;
    std::string method;
    double estimate = 0.0;
    double se = std::numeric_limits<double>::quiet_NaN();
    double p_value = 1.0;
    double ci_lower = std::numeric_limits<double>::quiet_NaN();
    double ci_upper = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t seed = 0;
};

struct MethodSummary {
    std::string method;
    double rejection_rate = 0.0;
    double bias = 0.0;
    double sd = 0.0;
    double mad = 0.0;
    std::size_t n_replications = 0;
    double runtime_seconds = 0.0;

    /// Equality of the statistical content (runtime excluded).
    [[nodiscard]] bool same_metrics(const MethodSummary& o) const {
        return method == o.method && rejection_rate == o.rejection_rate && bias == o.bias && sd == o.sd &&
               mad == o.mad && n_replications == o.n_replications;
    }
};

struct StudySummary {
    double alpha = 0.05;
    double delta_true = 0.0;
    std::vector<MethodSummary> methods;
    double runtime_seconds = 0.0;

    [[nodiscard]] const MethodSummary& at(std::string_view method) const {
        for (const auto& m : methods)
            if (m.method == method) return m;
        throw std::out_of_range("no summary for method '" + std::string(method) + "'");
    }
    [[nodiscard]] bool same_metrics(const StudySummary& o) const {
        if (alpha != o.alpha || delta_true != o.delta_true || methods.size() != o.methods.size()) return false;
        for (std::size_t i = 0; i < methods.size(); ++i)
            if (!methods[i].same_metrics(o.methods[i])) return false;
        return true;
    }
};

struct StudyOutcome {
    StudySummary summary;
    std::vector<RawRecord> records;
};

/// Metrics from raw records: rejection rate = share of p <= alpha; bias =
/// mean(estimate) - delta_true; sd = sample SD of the estimates; mad =
/// mean |estimate - delta_true|. Records are ordered by (method, replication)
/// before accumulation, so any partition of the same records gives the same
/// bits. Methods appear in first-seen order of `method_order` when given,
/// otherwise alphabetically.
inline StudySummary summarize(std::vector<RawRecord> records, double alpha, double delta_true,
                              const std::vector<std::string>& method_order = {}) {
    std::sort(records.begin(), records.end(), [](const RawRecord& a, const RawRecord& b) {
        return a.method != b.method ? a.method < b.method : a.replication < b.replication;
    });
    for (std::size_t i = 1; i < records.size(); ++i)
        if (records[i].method == records[i - 1].method && records[i].replication == records[i - 1].replication)
            throw MergeError("duplicate record for method '" + records[i].method + "' replication " +
                             std::to_string(records[i].replication));

    std::map<std::string, MethodSummary> by_method;
    std::size_t i = 0;
    while (i < records.size()) {
        std::size_t j = i;
        while (j < records.size() && records[j].method == records[i].method) ++j;
        MethodSummary s;
        s.method = records[i].method;
        s.n_replications = j - i;
        const double n = static_cast<double>(s.n_replications);
        std::size_t rejections = 0;
        double sum = 0.0, abs_dev = 0.0;
        for (std::size_t k = i; k < j; ++k) {
            if (records[k].p_value <= alpha) ++rejections;
            sum += records[k].estimate;
            abs_dev += std::abs(records[k].estimate - delta_true);
        }
        const double avg = sum / n;
        double ss = 0.0;
        for (std::size_t k = i; k < j; ++k) ss += (records[k].estimate - avg) * (records[k].estimate - avg);
        s.rejection_rate = static_cast<double>(rejections) / n;
        s.bias = avg - delta_true;
        s.sd = s.n_replications > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        s.mad = abs_dev / n;
        by_method.emplace(s.method, std::move(s));
        i = j;
    }

    StudySummary out;
    out.alpha = alpha;
    out.delta_true = delta_true;
    for (const auto& name : method_order) {
        auto it = by_method.find(name);
        if (it != by_method.end()) {
            out.methods.push_back(std::move(it->second));
            by_method.erase(it);
        }
    }
    for (auto& [name, s] : by_method) out.methods.push_back(std::move(s));
    return out;
}

/// Pools raw records from several runs. Every part must cover the same set
/// of methods.
inline StudySummary merge_summaries(const std::vector<std::vector<RawRecord>>& parts, double alpha,
                                    double delta_true, const std::vector<std::string>& method_order = {}) {
    if (parts.empty()) throw MergeError("merge_summaries: no parts");
    auto method_set = [](const std::vector<RawRecord>& part) {
        std::set<std::string> s;
        for (const auto& r : part) s.insert(r.method);
        return s;
    };
    const auto reference = method_set(parts.front());
    std::vector<RawRecord> pooled;
    for (const auto& part : parts) {
        if (method_set(part) != reference) throw MergeError("merge_summaries: parts cover different method sets");
        pooled.insert(pooled.end(), part.begin(), part.end());
    }
    return summarize(std::move(pooled), alpha, delta_true, method_order);
}

/// Throws if two coordinates of the study's seed grid hash to the same seed.
inline void check_seed_grid(const StudyConfig& cfg) {
    const std::uint64_t S = static_cast<std::uint64_t>(cfg.multisplit.splits);
    const std::uint64_t F = cfg.mining ? static_cast<std::uint64_t>(cfg.mining->F) : 0;
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(static_cast<std::size_t>(cfg.replications) * ((S + 1) * (F + 1) + 1));
    for (std::uint64_t r = cfg.first_replication; r < cfg.first_replication + cfg.replications; ++r) {
        if (!seen.insert(SeedKey::data(cfg.master_seed, r).value()).second)
            throw StudyError("seed collision at data seed of replication " + std::to_string(r));
        for (std::uint64_t s = 0; s <= S; ++s)
            for (std::uint64_t f = 0; f <= F; ++f)
                if (!seen.insert(SeedKey{cfg.master_seed, r, s, f}.value()).second)
                    throw StudyError("seed collision at (r, s, f) = (" + std::to_string(r) + ", " +
                                     std::to_string(s) + ", " + std::to_string(f) + ")");
    }
}

namespace detail {

inline RawRecord record_of(const TestResult& t) {
    RawRecord r;
    r.estimate = t.statistic;
    r.p_value = t.p_value;
    return r;
}

inline RawRecord record_of(const GatesEstimate& g) {
    RawRecord r;
    r.estimate = g.delta_hat;
    r.se = g.se;
    r.p_value = g.p_value;
    r.ci_lower = g.ci_lower;
    r.ci_upper = g.ci_upper;
    return r;
}

inline RawRecord run_method(Method method, const Dataset& data, const StudyConfig& cfg, const SeedKey& key) {
    const auto fit = learner_fitter(cfg.learner);
    const auto naive = [&](const Dataset& d, std::uint64_t s) { return naive_dml_test(d, fit, cfg.folds, s); };
    const auto twofold = [&](const Dataset& d, std::uint64_t s) { return twofold_test(d, fit, cfg.train_ratio, s); };
    const auto sequential = [&](const Dataset& d, std::uint64_t s) { return sequential_test(d, fit, cfg.folds, s); };
    const auto imli = [&](const Dataset& d, const SeedKey& k) {
        return gates_crossfit_single(d, fit, cfg.crossfit_folds, cfg.multisplit.alpha, k.value());
    };
    const auto cddf = [&](const Dataset& d, const SeedKey& k) {
        return gates_multisplit(d, fit, cfg.multisplit, k, cfg.train_ratio);
    };

    switch (method) {
        case Method::Naive: return record_of(naive(data, key.value()));
        case Method::Twofold: return record_of(twofold(data, key.value()));
        case Method::Sequential: return record_of(sequential(data, key.value()));
        case Method::NaiveMultisplit: return record_of(multisplit_test(naive, data, cfg.multisplit, key));
        case Method::TwofoldMultisplit: return record_of(multisplit_test(twofold, data, cfg.multisplit, key));
        case Method::SequentialMultisplit: return record_of(multisplit_test(sequential, data, cfg.multisplit, key));
        case Method::ImliStyle: return record_of(imli(data, key));
        case Method::Cddf: return record_of(cddf(data, key));
        case Method::ImliStyleMined: return record_of(mine_max(imli, data, *cfg.mining, key));
        case Method::CddfMined: return record_of(mine_max(cddf, data, *cfg.mining, key));
    }
    throw StudyError("unhandled method");
}

inline StudyOutcome run_study(const StudyConfig& cfg, StudyKind kind) {
    cfg.validate();
    const std::vector<Method> methods = cfg.methods.empty() ? default_methods(kind) : cfg.methods;
    for (Method m : methods)
        if (is_zero_cate_method(m) != (kind == StudyKind::ZeroCate))
            throw ConfigError("method '" + std::string(to_string(m)) + "' does not belong to this study");
    check_seed_grid(cfg);

    const auto start = std::chrono::steady_clock::now();
    const std::size_t R = static_cast<std::size_t>(cfg.replications);
    const std::size_t M = methods.size();
    std::vector<RawRecord> records(R * M);
    std::vector<double> method_seconds(M, 0.0);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex mu;

    auto worker = [&] {
        std::vector<double> local_seconds(M, 0.0);
        for (std::size_t idx = next++; idx < R && !failed; idx = next++) {
            const std::uint64_t r = cfg.first_replication + idx;
            std::size_t current = 0;
            try {
                const std::uint64_t data_seed = SeedKey::data(cfg.master_seed, r).value();
                const Dataset data = generate_dataset(cfg.dgp, data_seed);
                const SeedKey key{cfg.master_seed, r, 0, 0};
                for (current = 0; current < M; ++current) {
                    const auto t0 = std::chrono::steady_clock::now();
                    RawRecord rec = run_method(methods[current], data, cfg, key);
                    local_seconds[current] +=
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                    rec.replication = r;
                    rec.method = std::string(to_string(methods[current]));
                    rec.seed = data_seed;
                    records[idx * M + current] = std::move(rec);
                }
            } catch (const std::exception& e) {
                std::lock_guard lock(mu);
                if (!failed.exchange(true)) {
                    const std::string where = current < M ? std::string(to_string(methods[current])) : "dataset";
                    error = std::make_exception_ptr(StudyError("replication " + std::to_string(r) + ", method " +
                                                               where + ": " + e.what()));
                }
            }
        }
        std::lock_guard lock(mu);
        for (std::size_t m = 0; m < M; ++m) method_seconds[m] += local_seconds[m];
    };

    int n_workers = cfg.workers == 0 ? static_cast<int>(std::max(1u, std::thread::hardware_concurrency())) : cfg.workers;
    n_workers = std::min<int>(n_workers, static_cast<int>(R));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);

    std::vector<std::string> order;
    for (Method m : methods) order.emplace_back(to_string(m));
    const double delta_true = kind == StudyKind::Gates ? oracle_gates_delta(cfg.dgp.cate) : 0.0;
    StudyOutcome out;
    out.summary = summarize(records, cfg.alpha, delta_true, order);
    for (std::size_t m = 0; m < M; ++m) out.summary.methods[m].runtime_seconds = method_seconds[m];
    out.summary.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.records = std::move(records);
    return out;
}

}  // namespace detail

/// Size (cate = zero) or power (cate = rectified_z1) of the zero-CATE tests.
inline StudyOutcome run_zero_cate_study(const StudyConfig& cfg) {
    return detail::run_study(cfg, StudyKind::ZeroCate);
}

/// Bias, SD, MAD and rejection rate of the GATES-difference estimators.
/// The true parameter comes from oracle_gates_delta.
inline StudyOutcome run_gates_study(const StudyConfig& cfg) { return detail::run_study(cfg, StudyKind::Gates); }

}  // namespace hte
