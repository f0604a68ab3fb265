#include "mabret/bandit.hpp"

#include <cmath>
#include <stdexcept>

#include "mabret/rng.hpp"

namespace mabret {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.14159265358979323846); }

std::size_t argmax(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

/// Expected improvement of each arm's Gaussian posterior N(mean, var/pulls)
/// over the incumbent best empirical mean.
std::vector<double> expected_improvements(const std::vector<ArmStats>& arms) {
    double incumbent = arms[0].mean();
    for (const auto& a : arms) incumbent = std::max(incumbent, a.mean());
    std::vector<double> ei(arms.size());
    for (std::size_t i = 0; i < arms.size(); ++i) {
        double sigma = std::sqrt(arms[i].variance() / static_cast<double>(std::max<std::int64_t>(arms[i].pulls, 1)));
        double z = (arms[i].mean() - incumbent) / sigma;
        ei[i] = sigma * (z * normal_cdf(z) + normal_pdf(z));
    }
    return ei;
}

std::size_t sample_from(const std::vector<double>& probs, std::mt19937_64& rng) {
    double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return probs.size() - 1;
}

}  // namespace

std::vector<double> exp3_probabilities(const BanditPolicy& policy,
                                       const std::vector<ArmStats>& arms) {
    const std::size_t k = arms.size();
    double total = 0.0;
    for (const auto& a : arms) total += a.exp3_weight;
    if (total <= 0.0) total = 1.0;
    std::vector<double> p(k);
    for (std::size_t i = 0; i < k; ++i)
        p[i] = (1.0 - policy.exp3_gamma) * (arms[i].exp3_weight / total) +
               policy.exp3_gamma / static_cast<double>(k);
    return p;
}

std::size_t bandit_select(const BanditPolicy& policy, const std::vector<ArmStats>& arms,
                          std::int64_t t, std::mt19937_64& rng) {
    if (arms.empty()) throw std::invalid_argument("bandit_select: no arms");
    if (arms.size() == 1) return 0;

    switch (policy.kind) {
        case BanditKind::ucb: {
            std::vector<double> score(arms.size());
            double log_t = std::log(static_cast<double>(std::max<std::int64_t>(t, 1)));
            for (std::size_t i = 0; i < arms.size(); ++i) {
                double n = static_cast<double>(std::max<std::int64_t>(arms[i].pulls, 1));
                score[i] = arms[i].mean() + policy.ucb_c * std::sqrt(2.0 * log_t / n);
            }
            return argmax(score);
        }
        case BanditKind::ts: {
            std::vector<double> score(arms.size());
            for (std::size_t i = 0; i < arms.size(); ++i) {
                double n = static_cast<double>(std::max<std::int64_t>(arms[i].pulls, 1));
                score[i] = arms[i].mean() + std::sqrt(arms[i].variance() / n) * normal01(rng);
            }
            return argmax(score);
        }
        case BanditKind::ei:
            return argmax(expected_improvements(arms));
        case BanditKind::ei2: {
            std::vector<double> ei = expected_improvements(arms);
            std::size_t leader = argmax(ei);
            std::size_t runner = leader == 0 ? 1 : 0;
            for (std::size_t i = 0; i < ei.size(); ++i)
                if (i != leader && ei[i] > ei[runner]) runner = i;
            return uniform01(rng) < policy.ei2_beta ? leader : runner;
        }
        case BanditKind::exp3:
            return sample_from(exp3_probabilities(policy, arms), rng);
    }
    return 0;
}

bool bandit_update(const BanditPolicy& policy, std::vector<ArmStats>& arms, std::size_t chosen,
                   double raw_reward, RewardScaler& scaler) {
    if (chosen >= arms.size()) throw std::invalid_argument("bandit_update: arm out of range");
    bool clean = std::isfinite(raw_reward);
    if (!clean) raw_reward = scaler.midpoint();

    if (policy.kind == BanditKind::exp3) {
        // probability of the chosen arm under the weights as of selection time
        std::vector<double> p = exp3_probabilities(policy, arms);
        scaler.observe(raw_reward);
        double est = scaler.scale(raw_reward) / p[chosen];
        arms[chosen].exp3_weight *=
            std::exp(policy.exp3_gamma * est / static_cast<double>(arms.size()));
        double mx = 0.0;
        for (const auto& a : arms) mx = std::max(mx, a.exp3_weight);
        if (mx > 1e100) {
            for (auto& a : arms) a.exp3_weight /= mx;
        }
    } else {
        scaler.observe(raw_reward);
    }

    ArmStats& a = arms[chosen];
    a.pulls += 1;
    a.reward_sum += raw_reward;
    a.reward_sq_sum += raw_reward * raw_reward;
    a.last_reward = raw_reward;
    return clean;
}

}  // namespace mabret
