#pragma once

// Difference in sorted group average treatment effects (two groups):
// GATES(High) - GATES(Low), where units are ranked by a CATE proxy.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hte/cate_tests.hpp"
#include "hte/dgp.hpp"
#include "hte/multisplit.hpp"
#include "hte/scores.hpp"
#include "hte/splits.hpp"
#include "hte/stats.hpp"

namespace hte {

struct GatesEstimate {
    double delta_hat = 0.0;
    double se = 0.0;
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    double p_value = 1.0;
    std::string method;
    /// Set when the proxy was constant and the grouping was an arbitrary halving.
    bool degenerate = false;
};

namespace detail {

/// Two-sided normal p-value for H0: delta = 0.
inline double two_sided_p(double estimate, double se) {
    if (se > 0.0) return std::min(1.0, 2.0 * normal_upper_tail(std::abs(estimate / se)));
    return estimate == 0.0 ? 1.0 : 0.0;
}

}  // namespace detail

/// Splits the validation units at the proxy median and contrasts the mean
/// Horvitz-Thompson score of the two halves.
///
/// Units are sorted by proxy (index breaks ties); Low is the first ceil(m/2)
/// units and High the rest. The standard error is the two-sample Neyman form
/// sqrt(var_H/n_H + var_L/n_L). If the proxy is constant the grouping is the
/// index-order halving, delta_hat is reported as 0 and the result is flagged
/// degenerate.
inline GatesEstimate gates_on_validation(const Dataset& validation,
                                         const Eigen::Ref<const Eigen::VectorXd>& proxy_values, int G,
                                         double alpha) {
    if (G != 2) throw ConfigError("gates: only G = 2 groups is supported");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("gates: alpha must lie in (0,1)");
    const Eigen::Index m = validation.size();
    if (proxy_values.size() != m) throw DimensionError("gates: proxy values not aligned with validation rows");
    if (m < 2 * G) throw InsufficientDataError("gates: each group needs at least 2 units");

    const bool constant = proxy_values.maxCoeff() == proxy_values.minCoeff();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    if (!constant) {
        std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
            return proxy_values(a) < proxy_values(b);
        });
    }

    const Eigen::VectorXd gamma = ht_scores(validation);
    const auto n_low = static_cast<std::size_t>((m + 1) / 2);
    std::vector<double> low, high;
    low.reserve(n_low);
    high.reserve(static_cast<std::size_t>(m) - n_low);
    for (std::size_t r = 0; r < order.size(); ++r) (r < n_low ? low : high).push_back(gamma(order[r]));

    GatesEstimate out;
    out.degenerate = constant;
    out.delta_hat = constant ? 0.0 : mean(high) - mean(low);
    out.se = std::sqrt(sample_variance(high) / static_cast<double>(high.size()) +
                       sample_variance(low) / static_cast<double>(low.size()));
    const double z = normal_quantile(1.0 - alpha / 2.0);
    out.ci_lower = out.delta_hat - z * out.se;
    out.ci_upper = out.delta_hat + z * out.se;
    out.p_value = detail::two_sided_p(out.delta_hat, out.se);
    return out;
}

/// Cross-fitted estimator on a single split into L folds. Fold l is grouped
/// by the proxy trained on the other L-1 folds and yields delta_l; the
/// estimate is the fold average. The fold estimates are dependent through
/// shared training data, so the reported variance is the mean of the
/// per-fold Neyman variances, an upper bound on the variance of the average
/// for any correlation between folds.
template <ProxyFitter Fit>
GatesEstimate gates_crossfit_single(const Dataset& data, const Fit& fit, int L, double alpha, std::uint64_t seed) {
    if (L < 2) throw ConfigError("gates: cross-fitting needs L >= 2 folds");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("gates: alpha must lie in (0,1)");
    const SplitPlan plan = make_split(static_cast<std::size_t>(data.size()), KEqualFolds{L}, seed);
    std::vector<double> delta(static_cast<std::size_t>(L));
    double neyman = 0.0;
    bool degenerate = true;
    for (int l = 0; l < L; ++l) {
        const auto eval_rows = plan.rows_in(l);
        const auto model = fit(data.subset(plan.rows_not_in(l)));
        const Eigen::VectorXd proxy = model.predict(detail::gather_rows(data.Z, eval_rows));
        const GatesEstimate e = gates_on_validation(data.subset(eval_rows), proxy, 2, alpha);
        delta[static_cast<std::size_t>(l)] = e.delta_hat;
        neyman += e.se * e.se;
        degenerate = degenerate && e.degenerate;
    }
    const double Ld = static_cast<double>(L);
    GatesEstimate est;
    est.delta_hat = mean(delta);
    est.se = std::sqrt(neyman / Ld);
    const double z = normal_quantile(1.0 - alpha / 2.0);
    est.ci_lower = est.delta_hat - z * est.se;
    est.ci_upper = est.delta_hat + z * est.se;
    est.p_value = detail::two_sided_p(est.delta_hat, est.se);
    est.method = "imli_style";
    est.degenerate = degenerate;
    return est;
}

/// Median over cfg.splits auxiliary/validation splits. Per-split intervals
/// use level alpha/2 by default; the reported interval is the median of the
/// per-split endpoints and the p-value is the doubled median.
template <ProxyFitter Fit>
GatesEstimate gates_multisplit(const Dataset& data, const Fit& fit, const MultisplitConfig& cfg,
                               const SeedKey& base, double train_ratio = 2.0 / 3.0) {
    cfg.validate();
    const double split_alpha = cfg.per_split_level == PerSplitLevel::Half ? cfg.alpha / 2.0 : cfg.alpha;
    const auto S = static_cast<std::size_t>(cfg.splits);
    std::vector<double> delta(S), lower(S), upper(S), se(S), p(S);
    for (std::size_t s = 0; s < S; ++s) {
        try {
            const SplitPlan plan = make_split(static_cast<std::size_t>(data.size()), TrainTestRatio{train_ratio},
                                              base.with_split(s + 1).value());
            const auto aux_rows = plan.rows_in(0);
            const auto val_rows = plan.rows_in(1);
            const auto model = fit(data.subset(aux_rows));
            const Eigen::VectorXd proxy = model.predict(detail::gather_rows(data.Z, val_rows));
            const GatesEstimate e = gates_on_validation(data.subset(val_rows), proxy, 2, split_alpha);
            delta[s] = e.delta_hat;
            lower[s] = e.ci_lower;
            upper[s] = e.ci_upper;
            se[s] = e.se;
            p[s] = e.p_value;
        } catch (const std::exception& e) {
            throw StudyError("cddf split " + std::to_string(s + 1) + ": " + e.what());
        }
    }
    GatesEstimate out;
    out.delta_hat = median_even(delta);
    out.ci_lower = median_even(lower);
    out.ci_upper = median_even(upper);
    out.se = median_even(se);
    out.p_value = aggregate_p_values(p, cfg.double_median);
    out.method = "cddf";
    return out;
}

inline GatesEstimate gates_crossfit_single(const Dataset& data, const LearnerSpec& learner, int L, double alpha,
                                           std::uint64_t seed) {
    return gates_crossfit_single(data, learner_fitter(learner), L, alpha, seed);
}

inline GatesEstimate gates_multisplit(const Dataset& data, const LearnerSpec& learner, const MultisplitConfig& cfg,
                                      const SeedKey& base) {
    return gates_multisplit(data, learner_fitter(learner), cfg, base);
}

}  // namespace hte
