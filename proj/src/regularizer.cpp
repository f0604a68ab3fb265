#include "mabret/regularizer.hpp"

#include <cmath>
#include <stdexcept>

namespace mabret {

namespace {

Tensor2 row_of(const Tensor2& xs, std::size_t r) {
    Tensor2 x(1, xs.cols);
    for (std::size_t c = 0; c < xs.cols; ++c) x.at(0, c) = xs.at(r, c);
    return x;
}

// Seeds for the alpha term, one per layer: 2*alpha*imp_k*(Y - Y^m)/n.
// Returns the term's value alongside.
double neuron_seeds(const ForwardTrace& trace, const ForwardTrace& anchor_trace,
                    const RegularizerState& state, double alpha, std::vector<Tensor2>& seeds) {
    double value = 0.0;
    const double inv_n = 1.0 / static_cast<double>(trace.batch_size());
    for (std::size_t l = 0; l < seeds.size(); ++l) {
        const Tensor2& y = trace.ys[l + 1];
        const Tensor2& ym = anchor_trace.ys[l + 1];
        if (!y.same_shape(ym)) throw ShapeError("anchor trace shape mismatch");
        const std::vector<double>& imp = state.neuron_importance[l];
        if (imp.size() != y.cols) throw ShapeError("neuron importance shape mismatch");
        Tensor2 seed(y.rows, y.cols);
        for (std::size_t r = 0; r < y.rows; ++r) {
            for (std::size_t k = 0; k < y.cols; ++k) {
                double diff = y.at(r, k) - ym.at(r, k);
                value += alpha * imp[k] * diff * diff * inv_n;
                seed.at(r, k) = 2.0 * alpha * imp[k] * diff * inv_n;
            }
        }
        seeds[l] = std::move(seed);
    }
    return value;
}

}  // namespace

bool regularizer_active(const RegularizerConfig& cfg, const RegularizerState* state) {
    return cfg.kind != RegKind::none && state != nullptr && state->has_anchor() &&
           (cfg.alpha != 0.0 || cfg.beta != 0.0);
}

RegularizerState estimate_importance(const NetworkParams& params, const Tensor2& xs,
                                     const std::vector<int>& labels, RegKind kind,
                                     Loss task_loss) {
    if (xs.rows == 0) throw std::invalid_argument("estimate_importance: empty dataset");
    if (kind == RegKind::ewc && labels.size() != xs.rows)
        throw std::invalid_argument("estimate_importance: ewc needs one label per sample");

    RegularizerState state;
    state.anchor = params;
    state.param_importance.assign(params.param_count(), 0.0);
    if (kind == RegKind::nc) {
        state.neuron_importance.resize(params.depth());
        for (std::size_t l = 0; l < params.depth(); ++l)
            state.neuron_importance[l].assign(params.spec[l].output_dim, 0.0);
    }
    if (kind == RegKind::none) return state;

    for (std::size_t r = 0; r < xs.rows; ++r) {
        Tensor2 x = row_of(xs, r);
        ForwardTrace trace = forward(params, x);
        LossGrad lg;
        if (kind == RegKind::ewc) {
            // per-sample log-likelihood gradient; squared below
            std::vector<int> label{labels[r]};
            if (task_loss == Loss::cross_entropy) {
                lg = backward(params, trace, label, Loss::cross_entropy);
            } else {
                lg = backward(params, trace, one_hot(label, params.output_dim()), Loss::mse);
            }
            for (std::size_t s = 0; s < lg.grads.size(); ++s)
                state.param_importance[s] += lg.grads[s] * lg.grads[s];
        } else {
            // gradient of ||Y_N(x)||_2^2, seeded at the output
            const Tensor2& out = trace.output();
            std::vector<Tensor2> seeds(params.depth());
            Tensor2 seed(out.rows, out.cols);
            for (std::size_t i = 0; i < out.data.size(); ++i) seed.data[i] = 2.0 * out.data[i];
            seeds.back() = std::move(seed);
            lg = backprop_from_seeds(params, trace, seeds);
            for (std::size_t s = 0; s < lg.grads.size(); ++s)
                state.param_importance[s] += std::abs(lg.grads[s]);
            if (kind == RegKind::nc) {
                for (std::size_t l = 0; l < params.depth(); ++l) {
                    const Tensor2& ng = lg.neuron_grads[l];
                    for (std::size_t k = 0; k < ng.cols; ++k)
                        state.neuron_importance[l][k] += std::abs(ng.at(0, k));
                }
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(xs.rows);
    for (double& v : state.param_importance) v *= inv;
    for (auto& layer : state.neuron_importance)
        for (double& v : layer) v *= inv;
    state.sample_count = xs.rows;
    return state;
}

PenaltyResult penalty(const NetworkParams& params, const ForwardTrace& trace,
                      const ForwardTrace& anchor_trace, const RegularizerState& state,
                      const RegularizerConfig& cfg) {
    PenaltyResult res;
    res.grad.assign(params.param_count(), 0.0);
    if (cfg.kind == RegKind::none) return res;
    if (state.param_importance.size() != params.param_count())
        throw ShapeError("penalty: importance size mismatch");

    if (cfg.alpha != 0.0 && !state.neuron_importance.empty()) {
        std::vector<Tensor2> seeds(params.depth());
        res.value += neuron_seeds(trace, anchor_trace, state, cfg.alpha, seeds);
        LossGrad lg = backprop_from_seeds(params, trace, seeds);
        res.grad = std::move(lg.grads);
    }
    if (cfg.beta != 0.0) {
        std::vector<double> theta = flatten(params);
        std::vector<double> anchor = flatten(state.anchor);
        for (std::size_t s = 0; s < theta.size(); ++s) {
            double diff = theta[s] - anchor[s];
            res.value += cfg.beta * state.param_importance[s] * diff * diff;
            res.grad[s] += 2.0 * cfg.beta * state.param_importance[s] * diff;
        }
    }
    return res;
}

ObjectiveGrad objective_backward(const NetworkParams& params, const Tensor2& x,
                                 const std::vector<int>& labels, Loss kind,
                                 const RegularizerConfig& cfg, const RegularizerState* state) {
    ObjectiveGrad out;
    ForwardTrace trace = forward(params, x);
    if (!regularizer_active(cfg, state)) {
        LossGrad lg = backward(params, trace, labels, kind);
        out.task_loss = lg.loss;
        out.grads = std::move(lg.grads);
        return out;
    }

    std::vector<Tensor2> seeds(params.depth());
    if (cfg.alpha != 0.0 && !state->neuron_importance.empty()) {
        ForwardTrace anchor_trace = forward(state->anchor, x);
        out.penalty_value += neuron_seeds(trace, anchor_trace, *state, cfg.alpha, seeds);
    }
    Tensor2 task_seed;
    if (kind == Loss::cross_entropy) {
        task_seed = loss_output_seed(trace.output(), labels, kind);
        out.task_loss = cross_entropy_loss(trace.output(), labels);
    } else {
        Tensor2 targets = one_hot(labels, params.output_dim());
        const Tensor2& o = trace.output();
        task_seed = Tensor2(o.rows, o.cols);
        double scale = 2.0 / static_cast<double>(o.rows);
        for (std::size_t i = 0; i < o.data.size(); ++i)
            task_seed.data[i] = scale * (o.data[i] - targets.data[i]);
        out.task_loss = mse_loss(o, targets);
    }
    Tensor2& top = seeds.back();
    if (top.empty()) {
        top = std::move(task_seed);
    } else {
        for (std::size_t i = 0; i < top.data.size(); ++i) top.data[i] += task_seed.data[i];
    }
    LossGrad lg = backprop_from_seeds(params, trace, seeds);
    out.grads = std::move(lg.grads);

    if (cfg.beta != 0.0) {
        std::vector<double> theta = flatten(params);
        std::vector<double> anchor = flatten(state->anchor);
        for (std::size_t s = 0; s < theta.size(); ++s) {
            double diff = theta[s] - anchor[s];
            out.penalty_value += cfg.beta * state->param_importance[s] * diff * diff;
            out.grads[s] += 2.0 * cfg.beta * state->param_importance[s] * diff;
        }
    }
    if (!std::isfinite(out.task_loss) || !std::isfinite(out.penalty_value))
        throw NumericError("non-finite objective");
    return out;
}

double objective_value(const NetworkParams& params, const Tensor2& x,
                       const std::vector<int>& labels, Loss kind, const RegularizerConfig& cfg,
                       const RegularizerState* state) {
    ForwardTrace trace = forward(params, x);
    double value;
    if (kind == Loss::cross_entropy) {
        value = cross_entropy_loss(trace.output(), labels);
    } else {
        value = mse_loss(trace.output(), one_hot(labels, params.output_dim()));
    }
    if (!regularizer_active(cfg, state)) return value;

    if (cfg.alpha != 0.0 && !state->neuron_importance.empty()) {
        ForwardTrace anchor_trace = forward(state->anchor, x);
        const double inv_n = 1.0 / static_cast<double>(trace.batch_size());
        for (std::size_t l = 0; l < params.depth(); ++l) {
            const Tensor2& y = trace.ys[l + 1];
            const Tensor2& ym = anchor_trace.ys[l + 1];
            const std::vector<double>& imp = state->neuron_importance[l];
            for (std::size_t r = 0; r < y.rows; ++r)
                for (std::size_t k = 0; k < y.cols; ++k) {
                    double diff = y.at(r, k) - ym.at(r, k);
                    value += cfg.alpha * imp[k] * diff * diff * inv_n;
                }
        }
    }
    if (cfg.beta != 0.0) {
        std::vector<double> theta = flatten(params);
        std::vector<double> anchor = flatten(state->anchor);
        for (std::size_t s = 0; s < theta.size(); ++s) {
            double diff = theta[s] - anchor[s];
            value += cfg.beta * state->param_importance[s] * diff * diff;
        }
    }
    return value;
}

}  // namespace mabret
