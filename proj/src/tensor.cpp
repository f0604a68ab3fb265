#include "mabret/tensor.hpp"

#include <cmath>

namespace mabret {

bool all_finite(const Tensor2& t) { return all_finite(t.data); }

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace mabret
