#include "mabret/session.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mabret/rng.hpp"

namespace mabret {

std::vector<SplitPart> split(const Dataset& data, const SplitPlan& plan) {
    const std::size_t n = data.size();
    if (n < 60) throw std::invalid_argument("split: dataset too small (need >= 60 samples)");
    double set_sum = 0.0;
    for (double f : plan.set_fractions) set_sum += f;
    if (std::abs(set_sum - 1.0) > 1e-9)
        throw std::invalid_argument("split: set fractions must sum to 1");
    if (std::abs(plan.train_frac + plan.val_frac + plan.test_frac - 1.0) > 1e-9)
        throw std::invalid_argument("split: inner fractions must sum to 1");

    std::vector<std::size_t> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    auto rng = make_rng(derive_seed(plan.seed, "split"));
    if (!plan.ordered) shuffle_vec(ids, rng);

    std::vector<SplitPart> parts(plan.set_fractions.size());
    double cum = 0.0;
    std::size_t begin = 0;
    for (std::size_t p = 0; p < plan.set_fractions.size(); ++p) {
        cum += plan.set_fractions[p];
        std::size_t end = p + 1 == plan.set_fractions.size()
                              ? n
                              : static_cast<std::size_t>(std::llround(cum * static_cast<double>(n)));
        std::vector<std::size_t> set_ids(ids.begin() + static_cast<std::ptrdiff_t>(begin),
                                         ids.begin() + static_cast<std::ptrdiff_t>(end));
        if (set_ids.empty()) throw std::invalid_argument("split: empty set");
        // randomize within the set so ordered streams still get i.i.d. inner splits
        shuffle_vec(set_ids, rng);
        std::size_t n_set = set_ids.size();
        std::size_t n_train =
            static_cast<std::size_t>(std::llround(plan.train_frac * static_cast<double>(n_set)));
        std::size_t n_val = static_cast<std::size_t>(
            std::llround((plan.train_frac + plan.val_frac) * static_cast<double>(n_set)));
        parts[p].train.assign(set_ids.begin(), set_ids.begin() + static_cast<std::ptrdiff_t>(n_train));
        parts[p].val.assign(set_ids.begin() + static_cast<std::ptrdiff_t>(n_train),
                            set_ids.begin() + static_cast<std::ptrdiff_t>(n_val));
        parts[p].test.assign(set_ids.begin() + static_cast<std::ptrdiff_t>(n_val), set_ids.end());
        begin = end;
    }
    return parts;
}

std::vector<std::size_t> cumulative_ids(const std::vector<SplitPart>& parts, std::size_t upto,
                                        std::vector<std::size_t> SplitPart::*field) {
    std::vector<std::size_t> out;
    for (std::size_t p = 0; p <= upto && p < parts.size(); ++p) {
        const std::vector<std::size_t>& v = parts[p].*field;
        out.insert(out.end(), v.begin(), v.end());
    }
    return out;
}

}  // namespace mabret
