#pragma once

#include <cstdint>
#include <vector>

#include "mabret/dataset.hpp"

namespace mabret {

/// Six-way split (one 50% base plus five 10% shards), each further divided
/// into train 70% / val 10% / test 20%.
struct SplitPlan {
    std::uint64_t seed = 0;
    std::vector<double> set_fractions = {0.5, 0.1, 0.1, 0.1, 0.1, 0.1};
    double train_frac = 0.7;
    double val_frac = 0.1;
    double test_frac = 0.2;
    /// Keep stream order when assigning sets (aligns concept-drift segments
    /// with sessions); the inner train/val/test split stays randomized.
    bool ordered = false;
};

struct SplitPart {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;

    std::size_t size() const { return train.size() + val.size() + test.size(); }
};

std::vector<SplitPart> split(const Dataset& data, const SplitPlan& plan);

/// Concatenation of a part-wise field over sessions 0..m.
std::vector<std::size_t> cumulative_ids(const std::vector<SplitPart>& parts, std::size_t upto,
                                        std::vector<std::size_t> SplitPart::*field);

}  // namespace mabret
