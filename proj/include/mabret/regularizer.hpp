#pragma once

#include <vector>

#include "mabret/network.hpp"

namespace mabret {

enum class RegKind { none, nc, ewc, mas };

struct RegularizerConfig {
    RegKind kind = RegKind::none;
    double alpha = 0.0;  // neuron-drift term weight
    double beta = 0.0;   // parameter-drift term weight
};

/// Frozen snapshot of the previous session: anchor parameters plus the
/// importance weights estimated on that session's training data.
struct RegularizerState {
    NetworkParams anchor;
    std::vector<double> param_importance;               // flat, >= 0
    std::vector<std::vector<double>> neuron_importance; // per layer, per neuron; nc only
    std::size_t sample_count = 0;

    bool has_anchor() const { return !anchor.layers.empty(); }
};

/// Importance weights from the converged parameters on old data.
/// nc/mas average |d ||Y_N(x)||^2 / d theta_s| per parameter (nc additionally
/// |d ||Y_N(x)||^2 / d Y_ik| per neuron); ewc averages squared log-likelihood
/// gradients (diagonal Fisher). Sample-by-sample, so signs never cancel.
RegularizerState estimate_importance(const NetworkParams& params, const Tensor2& xs,
                                     const std::vector<int>& labels, RegKind kind,
                                     Loss task_loss);

struct PenaltyResult {
    double value = 0.0;
    std::vector<double> grad;  // flat contribution, added to the task gradient
};

/// Quadratic drift penalty
///   alpha * mean_batch sum_ik imp_ik (Y_ik - Y_ik^m)^2
/// + beta  * sum_s Omega_s (theta_s - theta_s^m)^2.
/// The neuron term's gradient flows through Y(theta) only; the anchor trace
/// must come from forward(state.anchor, same batch).
PenaltyResult penalty(const NetworkParams& params, const ForwardTrace& trace,
                      const ForwardTrace& anchor_trace, const RegularizerState& state,
                      const RegularizerConfig& cfg);

struct ObjectiveGrad {
    double task_loss = 0.0;
    double penalty_value = 0.0;
    std::vector<double> grads;

    double total() const { return task_loss + penalty_value; }
};

/// Full training objective (task loss + penalty) in one reverse sweep.
/// With kind none or alpha = beta = 0 the penalty machinery is skipped
/// entirely, so such runs match plain fine-tuning bit for bit.
ObjectiveGrad objective_backward(const NetworkParams& params, const Tensor2& x,
                                 const std::vector<int>& labels, Loss kind,
                                 const RegularizerConfig& cfg, const RegularizerState* state);

/// Forward-only value of the same objective.
double objective_value(const NetworkParams& params, const Tensor2& x,
                       const std::vector<int>& labels, Loss kind, const RegularizerConfig& cfg,
                       const RegularizerState* state);

bool regularizer_active(const RegularizerConfig& cfg, const RegularizerState* state);

}  // namespace mabret
