#pragma once

// Random sample partitions: K near-equal folds or a train/test ratio.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hte/errors.hpp"
#include "hte/rng.hpp"

namespace hte {

struct KEqualFolds {
    int K = 3;
};

struct TrainTestRatio {
    double train_ratio = 2.0 / 3.0;
};

using SplitKind = std::variant<KEqualFolds, TrainTestRatio>;

/// Fold index (0-based) for every unit. For TrainTestRatio, fold 0 is the
/// training part and fold 1 the test part.
class SplitPlan {
public:
    SplitPlan(std::vector<int> fold, int fold_count) : fold_(std::move(fold)), fold_count_(fold_count) {}

    [[nodiscard]] int fold_count() const noexcept { return fold_count_; }
    [[nodiscard]] std::size_t size() const noexcept { return fold_.size(); }
    [[nodiscard]] int fold_of(std::size_t i) const { return fold_[i]; }
    [[nodiscard]] std::span<const int> folds() const noexcept { return fold_; }

    [[nodiscard]] std::vector<int> rows_in(int k) const {
        return select([k](int f) { return f == k; });
    }
    [[nodiscard]] std::vector<int> rows_not_in(int k) const {
        return select([k](int f) { return f != k; });
    }
    /// Rows whose fold index is strictly below k.
    [[nodiscard]] std::vector<int> rows_before(int k) const {
        return select([k](int f) { return f < k; });
    }
    [[nodiscard]] std::vector<std::size_t> fold_sizes() const {
        std::vector<std::size_t> sizes(static_cast<std::size_t>(fold_count_), 0);
        for (int f : fold_) ++sizes[static_cast<std::size_t>(f)];
        return sizes;
    }

private:
    template <class Pred>
    [[nodiscard]] std::vector<int> select(Pred pred) const {
        std::vector<int> rows;
        for (std::size_t i = 0; i < fold_.size(); ++i)
            if (pred(fold_[i])) rows.push_back(static_cast<int>(i));
        return rows;
    }

    std::vector<int> fold_;
    int fold_count_;
};

/// Uniformly random partition of {0..n-1}. A seeded permutation is cut into
/// consecutive blocks: K folds whose sizes differ by at most one (the first
/// n mod K folds get the extra unit), or floor(r*n) training units followed
/// by the test units. Both kinds cut the same permutation for a given seed.
inline SplitPlan make_split(std::size_t n, const SplitKind& kind, std::uint64_t seed) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    rng.shuffle(std::span<int>(perm));

    std::vector<int> fold(n, 0);
    if (const auto* k = std::get_if<KEqualFolds>(&kind)) {
        if (k->K < 2) throw ConfigError("fold count K must be >= 2");
        if (n < 2 * static_cast<std::size_t>(k->K))
            throw InsufficientDataError("make_split: n = " + std::to_string(n) + " is too small for " +
                                        std::to_string(k->K) + " folds");
        const std::size_t K = static_cast<std::size_t>(k->K);
        const std::size_t base = n / K;
        const std::size_t extra = n % K;
        std::size_t pos = 0;
        for (std::size_t f = 0; f < K; ++f) {
            const std::size_t len = base + (f < extra ? 1 : 0);
            for (std::size_t j = 0; j < len; ++j) fold[static_cast<std::size_t>(perm[pos++])] = static_cast<int>(f);
        }
        return {std::move(fold), k->K};
    }

    const double r = std::get<TrainTestRatio>(kind).train_ratio;
    if (!(r > 0.0 && r < 1.0)) throw ConfigError("train_ratio must lie in (0,1)");
    const auto train = static_cast<std::size_t>(std::floor(r * static_cast<double>(n)));
    if (train < 2 || n - train < 2)
        throw InsufficientDataError("make_split: train/test ratio leaves a part with fewer than 2 units");
    for (std::size_t j = train; j < n; ++j) fold[static_cast<std::size_t>(perm[j])] = 1;
    return {std::move(fold), 2};
}

}  // namespace hte
