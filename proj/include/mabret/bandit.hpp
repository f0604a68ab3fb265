#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace mabret {

enum class BanditKind { ei, ei2, ucb, ts, exp3 };

struct BanditPolicy {
    BanditKind kind = BanditKind::ei2;
    double ucb_c = 1.0;
    double exp3_gamma = 0.1;   // in (0, 1]
    double ei2_beta = 0.8;     // in (0, 1): probability of playing the EI leader
};

constexpr double kVarianceFloor = 1e-12;

struct ArmStats {
    std::int64_t pulls = 0;
    double reward_sum = 0.0;
    double reward_sq_sum = 0.0;
    double exp3_weight = 1.0;
    double last_reward = 0.0;

    double mean() const { return pulls > 0 ? reward_sum / static_cast<double>(pulls) : 0.0; }
    /// Sample variance of observed rewards, clamped at the floor.
    double variance() const {
        if (pulls < 2) return kVarianceFloor;
        double m = mean();
        double v = (reward_sq_sum - static_cast<double>(pulls) * m * m) /
                   static_cast<double>(pulls - 1);
        return v > kVarianceFloor ? v : kVarianceFloor;
    }
};

/// Keeps EXP3 rewards bounded: min-max scaling over everything observed so
/// far. A degenerate min == max maps to 0.5.
struct RewardScaler {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    bool seen() const { return lo <= hi; }
    void observe(double r) {
        if (r < lo) lo = r;
        if (r > hi) hi = r;
    }
    double scale(double r) const {
        if (!seen() || lo == hi) return 0.5;
        double x = (r - lo) / (hi - lo);
        return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x);
    }
    double midpoint() const { return seen() ? 0.5 * (lo + hi) : 0.0; }
};

/// Mixed exponential-weights distribution; every entry >= gamma / K.
std::vector<double> exp3_probabilities(const BanditPolicy& policy,
                                       const std::vector<ArmStats>& arms);

/// Pick an arm. t is the current step count (UCB's log horizon). Every arm is
/// assumed to have at least one initialization pull.
std::size_t bandit_select(const BanditPolicy& policy, const std::vector<ArmStats>& arms,
                          std::int64_t t, std::mt19937_64& rng);

/// Record a reward for the chosen arm. Returns false when the raw reward was
/// non-finite and got replaced by the scaler midpoint (callers should log it).
bool bandit_update(const BanditPolicy& policy, std::vector<ArmStats>& arms, std::size_t chosen,
                   double raw_reward, RewardScaler& scaler);

}  // namespace mabret
