#pragma once

// Multi-split aggregation: repeat a single-split procedure over S random
// splits and report the doubled median p-value.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hte/cate_tests.hpp"
#include "hte/errors.hpp"
#include "hte/rng.hpp"
#include "hte/stats.hpp"

namespace hte {

enum class PerSplitLevel { Half, Full };

struct MultisplitConfig {
    int splits = 100;
    double alpha = 0.05;
    bool double_median = true;
    /// Per-split CI level for GATES: alpha/2 (Half) or alpha (Full).
    PerSplitLevel per_split_level = PerSplitLevel::Half;

    void validate() const {
        if (splits < 1) throw ConfigError("multisplit.splits must be >= 1");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("multisplit.alpha must lie in (0,1)");
    }
};

/// Signature of a single-split test: the seed drives the split.
using SingleSplitTest = std::function<TestResult(const Dataset&, std::uint64_t)>;

/// min(1, 2 * median) when doubling, the plain median otherwise.
inline double aggregate_p_values(std::span<const double> p_values, bool double_median = true) {
    const double med = median_even(p_values);
    return std::min(1.0, double_median ? 2.0 * med : med);
}

/// Runs `test` on cfg.splits splits seeded by base.with_split(1..S).
inline TestResult multisplit_test(const SingleSplitTest& test, const Dataset& data, const MultisplitConfig& cfg,
                                  const SeedKey& base) {
    cfg.validate();
    std::vector<double> p(static_cast<std::size_t>(cfg.splits));
    std::vector<double> stat(p.size());
    std::string method;
    Eigen::Index n_used = 0;
    for (int s = 1; s <= cfg.splits; ++s) {
        TestResult r;
        try {
            r = test(data, base.with_split(static_cast<std::uint64_t>(s)).value());
        } catch (const std::exception& e) {
            throw StudyError("multisplit split " + std::to_string(s) + ": " + e.what());
        }
        p[static_cast<std::size_t>(s - 1)] = r.p_value;
        stat[static_cast<std::size_t>(s - 1)] = r.statistic;
        method = r.method;
        n_used = r.n_used;
    }
    return {aggregate_p_values(p, cfg.double_median), median_even(stat), method + "_multisplit", n_used};
}

}  // namespace hte
