#pragma once

#include <cstdint>
#include <vector>

#include "mabret/network.hpp"

namespace mabret {

/// Adam with per-parameter bias correction. Masked-out entries keep their
/// moments, parameter value and correction factors untouched, so a weight
/// resuming after exclusion continues exactly where its own update history
/// left off (time-dilated, not stale-momentum).
struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t step = 0;

    std::vector<double> m;
    std::vector<double> v;
    std::vector<double> pow1;  // beta1^(own step count), starts at 1
    std::vector<double> pow2;

    static AdamState make(std::size_t n, double lr = 1e-3);
};

/// One Adam step over all parameters whose mask bit is set. Pass nullptr for
/// an unmasked update; an all-ones mask takes the identical code path.
void adam_step(NetworkParams& params, const std::vector<double>& grads, const GradMask* mask,
               AdamState& state);

}  // namespace mabret
