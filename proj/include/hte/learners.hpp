#pragma once

// T-learner CATE proxies: separate outcome regressions per treatment arm,
// tau_hat(z) = mu1_hat(z) - mu0_hat(z).

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "hte/dgp.hpp"
#include "hte/errors.hpp"

namespace hte {

enum class LearnerKind { RidgeTLearner, KnnTLearner };

inline std::string_view to_string(LearnerKind k) {
    return k == LearnerKind::RidgeTLearner ? "ridge" : "knn";
}

inline LearnerKind parse_learner_kind(std::string_view s) {
    if (s == "ridge") return LearnerKind::RidgeTLearner;
    if (s == "knn") return LearnerKind::KnnTLearner;
    throw ConfigError("learner must be one of {ridge, knn}, got '" + std::string(s) + "'");
}

struct LearnerSpec {
    LearnerKind kind = LearnerKind::RidgeTLearner;
    double ridge_penalty = 0.2;
    int basis_degree = 2;
    int k = 20;

    void validate() const {
        if (!(ridge_penalty >= 0.0) || !std::isfinite(ridge_penalty))
            throw ConfigError("learner.ridge_penalty must be >= 0");
        if (basis_degree < 1) throw ConfigError("learner.basis_degree must be >= 1");
        if (k < 1) throw ConfigError("learner.k must be >= 1");
    }
};

namespace detail {

/// Exponent vectors of every monomial with total degree 1..degree.
inline std::vector<std::vector<int>> monomial_exponents(int dim, int degree) {
    std::vector<std::vector<int>> out;
    std::vector<int> current(static_cast<std::size_t>(dim), 0);
    // Enumerate by total degree, then lexicographically.
    for (int total = 1; total <= degree; ++total) {
        auto recurse = [&](auto&& self, int var, int remaining) -> void {
            if (var == dim - 1) {
                current[static_cast<std::size_t>(var)] = remaining;
                out.push_back(current);
                return;
            }
            for (int e = remaining; e >= 0; --e) {
                current[static_cast<std::size_t>(var)] = e;
                self(self, var + 1, remaining - e);
            }
        };
        recurse(recurse, 0, total);
    }
    return out;
}

/// Raw polynomial features of the rows of Z (no constant column).
inline Eigen::MatrixXd expand(const Eigen::Ref<const Eigen::MatrixXd>& Z,
                              const std::vector<std::vector<int>>& exponents) {
    Eigen::MatrixXd X(Z.rows(), static_cast<Eigen::Index>(exponents.size()));
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        const auto& e = exponents[static_cast<std::size_t>(c)];
        for (Eigen::Index i = 0; i < Z.rows(); ++i) {
            double v = 1.0;
            for (Eigen::Index j = 0; j < Z.cols(); ++j)
                for (int p = 0; p < e[static_cast<std::size_t>(j)]; ++p) v *= Z(i, j);
            X(i, c) = v;
        }
    }
    return X;
}

/// Column means and population standard deviations; zero-variance columns get
/// scale 1 so they standardize to 0.
struct Standardizer {
    Eigen::RowVectorXd center;
    Eigen::RowVectorXd scale;

    static Standardizer fit(const Eigen::MatrixXd& X) {
        Standardizer s;
        const auto n = static_cast<double>(X.rows());
        s.center = X.colwise().mean();
        s.scale.resize(X.cols());
        for (Eigen::Index c = 0; c < X.cols(); ++c) {
            const double var = (X.col(c).array() - s.center(c)).square().sum() / n;
            const double sd = std::sqrt(var);
            s.scale(c) = sd > 1e-12 * (1.0 + std::abs(s.center(c))) ? sd : 1.0;
        }
        return s;
    }

    [[nodiscard]] Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const {
        return (X.rowwise() - center).array().rowwise() / scale.array();
    }
};

inline void split_arms(const Dataset& train, std::vector<int>& treated, std::vector<int>& control) {
    for (Eigen::Index i = 0; i < train.size(); ++i)
        (train.D(i) == 1 ? treated : control).push_back(static_cast<int>(i));
    if (treated.empty() || control.empty())
        throw DegenerateSplitError("fit_proxy: training set needs at least one treated and one control unit");
}

}  // namespace detail

/// Ridge fit of one arm on standardized polynomial features. The intercept
/// is unpenalized; the penalty enters as (X'X/n_arm + penalty*I).
struct RidgeArm {
    double intercept = 0.0;
    Eigen::VectorXd coef;
};

class RidgeTModel {
public:
    RidgeTModel(const Dataset& train, const LearnerSpec& spec) {
        std::vector<int> treated, control;
        detail::split_arms(train, treated, control);
        dim_ = static_cast<int>(train.dim());
        exponents_ = detail::monomial_exponents(dim_, spec.basis_degree);
        const Eigen::MatrixXd raw = detail::expand(train.Z, exponents_);
        standardizer_ = detail::Standardizer::fit(raw);
        const Eigen::MatrixXd X = standardizer_.apply(raw);
        arms_[1] = fit_arm(X, train.Y, treated, spec.ridge_penalty);
        arms_[0] = fit_arm(X, train.Y, control, spec.ridge_penalty);
    }

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] const RidgeArm& arm(int d) const noexcept { return arms_[d == 1 ? 1 : 0]; }

    [[nodiscard]] Eigen::MatrixXd features(const Eigen::Ref<const Eigen::MatrixXd>& Z) const {
        return standardizer_.apply(detail::expand(Z, exponents_));
    }

    /// mu_hat for arm `d` evaluated at every row of Z.
    [[nodiscard]] Eigen::VectorXd predict_arm(int d, const Eigen::Ref<const Eigen::MatrixXd>& Z) const {
        const RidgeArm& a = arm(d);
        return (features(Z) * a.coef).array() + a.intercept;
    }

    [[nodiscard]] Eigen::VectorXd predict(const Eigen::Ref<const Eigen::MatrixXd>& Z) const {
        const Eigen::MatrixXd X = features(Z);
        const Eigen::VectorXd mu1 = (X * arms_[1].coef).array() + arms_[1].intercept;
        const Eigen::VectorXd mu0 = (X * arms_[0].coef).array() + arms_[0].intercept;
        return mu1 - mu0;
    }

private:
    static RidgeArm fit_arm(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                            const std::vector<int>& rows, double penalty) {
        const auto m = static_cast<Eigen::Index>(rows.size());
        const Eigen::Index p = X.cols();
        Eigen::MatrixXd Xa(m, p);
        Eigen::VectorXd ya(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            Xa.row(i) = X.row(rows[static_cast<std::size_t>(i)]);
            ya(i) = Y(rows[static_cast<std::size_t>(i)]);
        }
        const Eigen::RowVectorXd x_bar = Xa.colwise().mean();
        const double y_bar = ya.mean();
        Xa.rowwise() -= x_bar;
        ya.array() -= y_bar;

        const double inv_m = 1.0 / static_cast<double>(m);
        Eigen::MatrixXd gram = (Xa.transpose() * Xa) * inv_m;
        gram.diagonal().array() += penalty;
        const Eigen::VectorXd rhs = (Xa.transpose() * ya) * inv_m;

        RidgeArm arm;
        if (penalty > 0.0) {
            arm.coef = gram.llt().solve(rhs);
        } else {
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
            if (qr.rank() < p)
                throw ConfigError("learner.ridge_penalty = 0 requires a full-rank design in each arm");
            arm.coef = qr.solve(rhs);
        }
        arm.intercept = y_bar - x_bar.dot(arm.coef);
        return arm;
    }

    int dim_ = 0;
    std::vector<std::vector<int>> exponents_;
    detail::Standardizer standardizer_;
    RidgeArm arms_[2];
};

/// k-nearest-neighbour arm means in standardized covariate space; ties in
/// distance resolve to the lower training index.
class KnnTModel {
public:
    KnnTModel(const Dataset& train, const LearnerSpec& spec) : k_(spec.k) {
        std::vector<int> treated, control;
        detail::split_arms(train, treated, control);
        if (static_cast<std::size_t>(k_) > std::min(treated.size(), control.size()))
            throw ConfigError("learner.k = " + std::to_string(k_) +
                              " exceeds the size of a treatment arm in the training set");
        dim_ = static_cast<int>(train.dim());
        standardizer_ = detail::Standardizer::fit(train.Z);
        const Eigen::MatrixXd X = standardizer_.apply(train.Z);
        store(X, train.Y, treated, arms_[1]);
        store(X, train.Y, control, arms_[0]);
    }

    [[nodiscard]] int dim() const noexcept { return dim_; }

    [[nodiscard]] Eigen::VectorXd predict_arm(int d, const Eigen::Ref<const Eigen::MatrixXd>& Z) const {
        const Eigen::MatrixXd X = standardizer_.apply(Z);
        Eigen::VectorXd out(Z.rows());
        for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = arm_mean(arms_[d == 1 ? 1 : 0], X.row(i));
        return out;
    }

    [[nodiscard]] Eigen::VectorXd predict(const Eigen::Ref<const Eigen::MatrixXd>& Z) const {
        const Eigen::MatrixXd X = standardizer_.apply(Z);
        Eigen::VectorXd out(Z.rows());
        for (Eigen::Index i = 0; i < X.rows(); ++i)
            out(i) = arm_mean(arms_[1], X.row(i)) - arm_mean(arms_[0], X.row(i));
        return out;
    }

private:
    struct Arm {
        Eigen::MatrixXd X;
        Eigen::VectorXd y;
    };

    static void store(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, const std::vector<int>& rows,
                      Arm& arm) {
        arm.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
        arm.y.resize(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            arm.X.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
            arm.y(static_cast<Eigen::Index>(i)) = Y(rows[i]);
        }
    }

    [[nodiscard]] double arm_mean(const Arm& arm, const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
        const Eigen::Index m = arm.X.rows();
        std::vector<std::pair<double, Eigen::Index>> dist(static_cast<std::size_t>(m));
        for (Eigen::Index i = 0; i < m; ++i)
            dist[static_cast<std::size_t>(i)] = {(arm.X.row(i) - x).squaredNorm(), i};
        const auto kth = dist.begin() + k_;
        std::partial_sort(dist.begin(), kth, dist.end());
        double s = 0.0;
        for (auto it = dist.begin(); it != kth; ++it) s += arm.y(it->second);
        return s / k_;
    }

    int k_;
    int dim_ = 0;
    detail::Standardizer standardizer_;
    Arm arms_[2];
};

/// A fitted CATE proxy. Immutable after construction.
class ProxyModel {
public:
    ProxyModel(RidgeTModel m, Eigen::Index training_size)
        : impl_(std::move(m)), training_size_(training_size) {}
    ProxyModel(KnnTModel m, Eigen::Index training_size)
        : impl_(std::move(m)), training_size_(training_size) {}

    [[nodiscard]] std::string_view learner_name() const noexcept {
        return std::holds_alternative<RidgeTModel>(impl_) ? "ridge" : "knn";
    }
    [[nodiscard]] Eigen::Index training_size() const noexcept { return training_size_; }
    [[nodiscard]] int dim() const {
        return std::visit([](const auto& m) { return m.dim(); }, impl_);
    }

    [[nodiscard]] Eigen::VectorXd predict(const Eigen::Ref<const Eigen::MatrixXd>& Z) const {
        check_dim(Z.cols());
        return std::visit([&](const auto& m) { return m.predict(Z); }, impl_);
    }

    [[nodiscard]] Eigen::VectorXd predict_arm(int d, const Eigen::Ref<const Eigen::MatrixXd>& Z) const {
        check_dim(Z.cols());
        return std::visit([&](const auto& m) { return m.predict_arm(d, Z); }, impl_);
    }

    [[nodiscard]] double operator()(const Eigen::Ref<const Eigen::RowVectorXd>& z) const {
        return predict(Eigen::MatrixXd(z))(0);
    }

    [[nodiscard]] const RidgeTModel* ridge() const noexcept { return std::get_if<RidgeTModel>(&impl_); }

private:
    void check_dim(Eigen::Index cols) const {
        if (cols != dim())
            throw DimensionError("predict_cate: expected " + std::to_string(dim()) + " covariates, got " +
                                 std::to_string(cols));
    }

    std::variant<RidgeTModel, KnnTModel> impl_;
    Eigen::Index training_size_;
};

inline ProxyModel fit_proxy(const Dataset& train, const LearnerSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case LearnerKind::KnnTLearner:
            return {KnnTModel(train, spec), train.size()};
        case LearnerKind::RidgeTLearner:
            break;
    }
    return {RidgeTModel(train, spec), train.size()};
}

inline Eigen::VectorXd predict_cate(const ProxyModel& model, const Eigen::Ref<const Eigen::MatrixXd>& Z) {
    return model.predict(Z);
}

}  // namespace hte
