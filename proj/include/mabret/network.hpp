#pragma once

#include <cstdint>
#include <vector>

#include "mabret/tensor.hpp"

namespace mabret {

enum class Activation { identity, relu, tanh, sigmoid, softmax };
enum class Loss { cross_entropy, mse };

struct LayerSpec {
    std::size_t input_dim = 0;
    std::size_t output_dim = 0;
    Activation activation = Activation::identity;
};

/// Weights between two layers: w is (output_dim x input_dim), b is (1 x output_dim).
struct Layer {
    Tensor2 w;
    Tensor2 b;
};

/// Stable scalar ordering over all parameters: for each layer, w row-major,
/// then b. Clustering, importances and masks all address parameters through
/// this global index.
struct FlatView {
    struct LayerSpan {
        std::size_t w_begin = 0;
        std::size_t b_begin = 0;
        std::size_t end = 0;
    };
    std::vector<LayerSpan> spans;
    std::size_t total = 0;

    FlatView() = default;
    explicit FlatView(const std::vector<LayerSpec>& spec);

    std::size_t weight_index(std::size_t layer, std::size_t row, std::size_t col,
                             const std::vector<LayerSpec>& spec) const {
        return spans[layer].w_begin + row * spec[layer].input_dim + col;
    }
    std::size_t bias_index(std::size_t layer, std::size_t k) const {
        return spans[layer].b_begin + k;
    }
};

struct NetworkParams {
    std::vector<LayerSpec> spec;
    std::vector<Layer> layers;

    std::size_t param_count() const;
    std::size_t depth() const { return layers.size(); }
    std::size_t input_dim() const { return spec.front().input_dim; }
    std::size_t output_dim() const { return spec.back().output_dim; }

    /// He-style uniform init scaled by fan-in, biases zero, seeded.
    static NetworkParams init(const std::vector<LayerSpec>& spec, std::uint64_t seed);
    /// Zero-weight network with the given shape.
    static NetworkParams zeros(const std::vector<LayerSpec>& spec);
};

/// Rejects empty specs, non-chaining dims and softmax on a hidden layer.
void validate_spec(const std::vector<LayerSpec>& spec);

std::vector<double> flatten(const NetworkParams& p);
void unflatten(const std::vector<double>& flat, NetworkParams& p);

/// Per-parameter update permission bit, addressed by flat index.
struct GradMask {
    std::vector<std::uint8_t> bits;

    static GradMask ones(std::size_t n) { return GradMask{std::vector<std::uint8_t>(n, 1)}; }
    static GradMask zeros(std::size_t n) { return GradMask{std::vector<std::uint8_t>(n, 0)}; }
    std::size_t size() const { return bits.size(); }
};

/// Activations captured during a forward pass. ys[0] is the input batch,
/// ys[i] (i >= 1) the activation of layer i; zs[i-1] its pre-activation.
struct ForwardTrace {
    std::vector<Tensor2> ys;
    std::vector<Tensor2> zs;

    std::size_t batch_size() const { return ys.empty() ? 0 : ys.front().rows; }
    const Tensor2& output() const { return ys.back(); }
};

ForwardTrace forward(const NetworkParams& p, const Tensor2& batch_x);

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grads;          // flat, one entry per parameter
    std::vector<Tensor2> neuron_grads;  // d loss / d Y_i for layers 1..N
};

/// Reverse sweep from per-layer activation adjoints. seeds[i] (may be empty)
/// is added to d/dY_{i+1}; the sweep is linear in the seeds.
LossGrad backprop_from_seeds(const NetworkParams& p, const ForwardTrace& trace,
                             const std::vector<Tensor2>& seeds);

double cross_entropy_loss(const Tensor2& probs, const std::vector<int>& labels);
double mse_loss(const Tensor2& out, const Tensor2& targets);

/// Mean-over-batch task loss and its gradients; neuron_grads holds the
/// activation adjoints needed by the regularizers.
LossGrad backward(const NetworkParams& p, const ForwardTrace& trace,
                  const std::vector<int>& labels, Loss kind);
LossGrad backward(const NetworkParams& p, const ForwardTrace& trace,
                  const Tensor2& targets, Loss kind);

/// Output seed (d loss / d Y_N) for the given task loss.
Tensor2 loss_output_seed(const Tensor2& output, const std::vector<int>& labels, Loss kind);

Tensor2 one_hot(const std::vector<int>& labels, std::size_t classes);

}  // namespace mabret
