#pragma once

// Simulated randomized experiments with a known propensity and known CATE.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "hte/errors.hpp"
#include "hte/rng.hpp"

namespace hte {

enum class CateSpec { Zero, RectifiedFirstCoordinate };

inline std::string_view to_string(CateSpec c) {
    return c == CateSpec::Zero ? "zero" : "rectified_z1";
}

inline CateSpec parse_cate(std::string_view s) {
    if (s == "zero") return CateSpec::Zero;
    if (s == "rectified_z1") return CateSpec::RectifiedFirstCoordinate;
    throw ConfigError("cate must be one of {zero, rectified_z1}, got '" + std::string(s) + "'");
}

struct DgpConfig {
    int n = 1000;
    // Five covariates with a quadratic ridge basis (20 features) give the
    // single-split naive test its size distortion; see README.
    int d = 5;
    CateSpec cate = CateSpec::Zero;
    double baseline_scale = 0.0;
    double noise_sd = 1.0;
    double propensity = 0.5;

    void validate() const {
        if (n < 4) throw ConfigError("dgp.n must be >= 4");
        if (d < 1) throw ConfigError("dgp.d must be >= 1");
        if (!(noise_sd > 0.0) || !std::isfinite(noise_sd))
            throw ConfigError("dgp.noise_sd must be > 0");
        if (!(propensity > 0.0 && propensity < 1.0))
            throw ConfigError("dgp.propensity must lie in (0,1)");
        if (!std::isfinite(baseline_scale)) throw ConfigError("dgp.baseline_scale must be finite");
    }
};

/// One randomized experiment: covariates Z (n x d), treatment D in {0,1},
/// outcome Y, and the known assignment probability.
struct Dataset {
    Eigen::MatrixXd Z;
    Eigen::VectorXi D;
    Eigen::VectorXd Y;
    double propensity = 0.5;

    [[nodiscard]] Eigen::Index size() const noexcept { return Y.size(); }
    [[nodiscard]] Eigen::Index dim() const noexcept { return Z.cols(); }

    /// Rows selected by `rows`, in that order.
    [[nodiscard]] Dataset subset(std::span<const int> rows) const {
        Dataset out;
        const auto m = static_cast<Eigen::Index>(rows.size());
        out.Z.resize(m, Z.cols());
        out.D.resize(m);
        out.Y.resize(m);
        out.propensity = propensity;
        for (Eigen::Index i = 0; i < m; ++i) {
            const int r = rows[static_cast<std::size_t>(i)];
            out.Z.row(i) = Z.row(r);
            out.D(i) = D(r);
            out.Y(i) = Y(r);
        }
        return out;
    }
};

inline double true_cate(CateSpec spec, std::span<const double> z) {
    if (z.empty()) throw DimensionError("true_cate: covariate vector is empty");
    switch (spec) {
        case CateSpec::Zero:
            return 0.0;
        case CateSpec::RectifiedFirstCoordinate:
            return z[0] > 0.0 ? z[0] : 0.0;
    }
    return 0.0;
}

inline double true_cate(CateSpec spec, const Eigen::Ref<const Eigen::RowVectorXd>& z) {
    if (z.size() == 0) throw DimensionError("true_cate: covariate vector is empty");
    return true_cate(spec, std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
}

/// Population value of the two-group GATES difference when units are grouped
/// by the true CATE. Zero for the null design; E[z | z > 0] = sqrt(2/pi) for
/// the rectified design (diagnostic only).
inline double oracle_gates_delta(CateSpec spec) {
    return spec == CateSpec::Zero ? 0.0 : std::sqrt(2.0 / std::numbers::pi);
}

/// Population mean of tau(Z) for Z ~ N(0, I).
inline double oracle_mean_cate(CateSpec spec) {
    return spec == CateSpec::Zero ? 0.0 : 1.0 / std::sqrt(2.0 * std::numbers::pi);
}

/// Y = baseline_scale * b(Z) + D * tau(Z) + eps, with b(z) = z2 (z1 when d = 1).
inline Dataset generate_dataset(const DgpConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    Dataset data;
    data.Z.resize(cfg.n, cfg.d);
    data.D.resize(cfg.n);
    data.Y.resize(cfg.n);
    data.propensity = cfg.propensity;
    const int baseline_col = cfg.d >= 2 ? 1 : 0;
    for (int i = 0; i < cfg.n; ++i) {
        for (int j = 0; j < cfg.d; ++j) data.Z(i, j) = rng.normal();
        data.D(i) = rng.bernoulli(cfg.propensity) ? 1 : 0;
        const double eps = cfg.noise_sd * rng.normal();
        const double tau = true_cate(cfg.cate, data.Z.row(i));
        data.Y(i) = cfg.baseline_scale * data.Z(i, baseline_col) + data.D(i) * tau + eps;
    }
    return data;
}

}  // namespace hte
