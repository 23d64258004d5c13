#pragma once

// Horvitz-Thompson CATE scores and the studentized slope statistic that every
// zero-CATE test reuses.

#include <cmath>

#include <Eigen/Dense>

#include "hte/dgp.hpp"
#include "hte/errors.hpp"

namespace hte {

/// Gamma_i = D_i Y_i / p - (1 - D_i) Y_i / (1 - p), so E[Gamma | Z] = tau(Z).
inline Eigen::VectorXd ht_scores(const Dataset& data) {
    const double p = data.propensity;
    Eigen::VectorXd g(data.size());
    for (Eigen::Index i = 0; i < data.size(); ++i)
        g(i) = data.D(i) == 1 ? data.Y(i) / p : -data.Y(i) / (1.0 - p);
    return g;
}

/// OLS slope of scores on the centered proxy with its HC1 standard error.
struct ZStat {
    double slope = 0.0;
    double se = 0.0;
    double zeta = 0.0;
    Eigen::Index m = 0;
};

inline ZStat slope_stat(const Eigen::Ref<const Eigen::VectorXd>& scores,
                        const Eigen::Ref<const Eigen::VectorXd>& proxy) {
    if (scores.size() != proxy.size())
        throw DimensionError("slope_stat: scores and proxy differ in length");
    const Eigen::Index m = scores.size();
    if (m < 3) throw InsufficientDataError("slope_stat: need at least 3 evaluation units");

    ZStat out;
    out.m = m;
    const double md = static_cast<double>(m);
    const double proxy_mean = proxy.mean();
    const Eigen::VectorXd x = proxy.array() - proxy_mean;
    const double sxx = x.squaredNorm();
    const double proxy_sd = std::sqrt(sxx / (md - 1.0));
    if (proxy_sd <= 1e-10 * (1.0 + std::abs(proxy_mean))) return out;

    const Eigen::VectorXd y = scores.array() - scores.mean();
    out.slope = x.dot(y) / sxx;
    const Eigen::VectorXd resid = y - out.slope * x;
    const double meat = (x.array().square() * resid.array().square()).sum();
    out.se = std::sqrt(md / (md - 2.0) * meat) / sxx;
    if (out.se > 1e-12 * (1.0 + std::abs(out.slope))) out.zeta = out.slope / out.se;
    return out;
}

}  // namespace hte
