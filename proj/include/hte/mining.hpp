#pragma once

// Seed mining: run a seeded estimator under F seeds and keep the most
// favorable run, reporting its inference as if no selection had happened.

#include <functional>
#include <string>
#include <string_view>

#include "hte/errors.hpp"
#include "hte/gates.hpp"
#include "hte/rng.hpp"

namespace hte {

enum class MineBy { Estimate, PValue };

inline std::string_view to_string(MineBy m) { return m == MineBy::Estimate ? "estimate" : "pvalue"; }

inline MineBy parse_mine_by(std::string_view s) {
    if (s == "estimate") return MineBy::Estimate;
    if (s == "pvalue") return MineBy::PValue;
    throw ConfigError("mining.mine_by must be one of {estimate, pvalue}, got '" + std::string(s) + "'");
}

struct MiningConfig {
    int F = 5;
    MineBy mine_by = MineBy::Estimate;

    void validate() const {
        if (F < 1) throw ConfigError("mining.mining_f must be >= 1");
    }
};

using SeededGatesProcedure = std::function<GatesEstimate(const Dataset&, const SeedKey&)>;

/// Runs `procedure` with keys base.with_mining(1..F). Keeps the largest
/// delta_hat (or the smallest p-value); ties go to the earliest round.
inline GatesEstimate mine_max(const SeededGatesProcedure& procedure, const Dataset& data, const MiningConfig& cfg,
                              const SeedKey& base) {
    cfg.validate();
    GatesEstimate best;
    for (int f = 1; f <= cfg.F; ++f) {
        GatesEstimate run;
        try {
            run = procedure(data, base.with_mining(static_cast<std::uint64_t>(f)));
        } catch (const std::exception& e) {
            throw StudyError("mining seed " + std::to_string(f) + ": " + e.what());
        }
        const bool better = cfg.mine_by == MineBy::Estimate ? run.delta_hat > best.delta_hat
                                                            : run.p_value < best.p_value;
        if (f == 1 || better) best = std::move(run);
    }
    return best;
}

}  // namespace hte
