#include "mabret/adam.hpp"

#include <cmath>

namespace mabret {

AdamState AdamState::make(std::size_t n, double lr) {
    AdamState s;
    s.lr = lr;
    s.m.assign(n, 0.0);
    s.v.assign(n, 0.0);
    s.pow1.assign(n, 1.0);
    s.pow2.assign(n, 1.0);
    return s;
}

void adam_step(NetworkParams& params, const std::vector<double>& grads, const GradMask* mask,
               AdamState& state) {
    const std::size_t n = params.param_count();
    if (grads.size() != n || state.m.size() != n)
        throw ShapeError("adam_step: size mismatch");
    if (mask && mask->size() != n) throw ShapeError("adam_step: mask size mismatch");

    state.step += 1;
    std::size_t idx = 0;
    auto update_span = [&](std::vector<double>& values) {
        for (double& value : values) {
            if (!mask || mask->bits[idx]) {
                double g = grads[idx];
                double m = state.beta1 * state.m[idx] + (1.0 - state.beta1) * g;
                double v = state.beta2 * state.v[idx] + (1.0 - state.beta2) * g * g;
                state.m[idx] = m;
                state.v[idx] = v;
                state.pow1[idx] *= state.beta1;
                state.pow2[idx] *= state.beta2;
                double mhat = m / (1.0 - state.pow1[idx]);
                double vhat = v / (1.0 - state.pow2[idx]);
                value -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
            }
            ++idx;
        }
    };
    for (auto& layer : params.layers) {
        update_span(layer.w.data);
        update_span(layer.b.data);
    }
}

}  // namespace mabret
