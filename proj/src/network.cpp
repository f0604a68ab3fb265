#include "mabret/network.hpp"

#include <algorithm>
#include <cmath>

#include "mabret/rng.hpp"

namespace mabret {

namespace {

constexpr double kLogClamp = 1e-12;

void apply_activation(Activation act, const Tensor2& z, Tensor2& y) {
    y = z;
    switch (act) {
        case Activation::identity:
            break;
        case Activation::relu:
            for (double& v : y.data) v = v > 0.0 ? v : 0.0;
            break;
        case Activation::tanh:
            for (double& v : y.data) v = std::tanh(v);
            break;
        case Activation::sigmoid:
            for (double& v : y.data) v = 1.0 / (1.0 + std::exp(-v));
            break;
        case Activation::softmax:
            for (std::size_t r = 0; r < y.rows; ++r) {
                double mx = y.at(r, 0);
                for (std::size_t c = 1; c < y.cols; ++c) mx = std::max(mx, y.at(r, c));
                double sum = 0.0;
                for (std::size_t c = 0; c < y.cols; ++c) {
                    double e = std::exp(y.at(r, c) - mx);
                    y.at(r, c) = e;
                    sum += e;
                }
                for (std::size_t c = 0; c < y.cols; ++c) y.at(r, c) /= sum;
            }
            break;
    }
}

// dZ from dY given the activation. Softmax needs the full row Jacobian:
// dz_j = y_j * (dy_j - sum_k dy_k y_k).
void activation_backward(Activation act, const Tensor2& z, const Tensor2& y, const Tensor2& dy,
                         Tensor2& dz) {
    dz = Tensor2(dy.rows, dy.cols);
    switch (act) {
        case Activation::identity:
            dz.data = dy.data;
            break;
        case Activation::relu:
            for (std::size_t i = 0; i < dz.data.size(); ++i)
                dz.data[i] = z.data[i] > 0.0 ? dy.data[i] : 0.0;
            break;
        case Activation::tanh:
            for (std::size_t i = 0; i < dz.data.size(); ++i)
                dz.data[i] = dy.data[i] * (1.0 - y.data[i] * y.data[i]);
            break;
        case Activation::sigmoid:
            for (std::size_t i = 0; i < dz.data.size(); ++i)
                dz.data[i] = dy.data[i] * y.data[i] * (1.0 - y.data[i]);
            break;
        case Activation::softmax:
            for (std::size_t r = 0; r < dy.rows; ++r) {
                double dot = 0.0;
                for (std::size_t c = 0; c < dy.cols; ++c) dot += dy.at(r, c) * y.at(r, c);
                for (std::size_t c = 0; c < dy.cols; ++c)
                    dz.at(r, c) = y.at(r, c) * (dy.at(r, c) - dot);
            }
            break;
    }
}

}  // namespace

FlatView::FlatView(const std::vector<LayerSpec>& spec) {
    spans.resize(spec.size());
    std::size_t off = 0;
    for (std::size_t l = 0; l < spec.size(); ++l) {
        spans[l].w_begin = off;
        off += spec[l].output_dim * spec[l].input_dim;
        spans[l].b_begin = off;
        off += spec[l].output_dim;
        spans[l].end = off;
    }
    total = off;
}

void validate_spec(const std::vector<LayerSpec>& spec) {
    if (spec.empty()) throw ShapeError("network spec is empty");
    for (std::size_t l = 0; l < spec.size(); ++l) {
        if (spec[l].input_dim < 1 || spec[l].output_dim < 1)
            throw ShapeError("layer dims must be >= 1");
        if (l + 1 < spec.size()) {
            if (spec[l].output_dim != spec[l + 1].input_dim)
                throw ShapeError("layer shapes do not chain");
            if (spec[l].activation == Activation::softmax)
                throw ShapeError("softmax only permitted on the final layer");
        }
    }
}

std::size_t NetworkParams::param_count() const {
    std::size_t n = 0;
    for (const auto& s : spec) n += s.output_dim * s.input_dim + s.output_dim;
    return n;
}

NetworkParams NetworkParams::init(const std::vector<LayerSpec>& spec, std::uint64_t seed) {
    validate_spec(spec);
    NetworkParams p;
    p.spec = spec;
    p.layers.resize(spec.size());
    auto rng = make_rng(seed);
    for (std::size_t l = 0; l < spec.size(); ++l) {
        double bound = std::sqrt(6.0 / static_cast<double>(spec[l].input_dim));
        p.layers[l].w = Tensor2(spec[l].output_dim, spec[l].input_dim);
        for (double& v : p.layers[l].w.data) v = uniform_range(rng, -bound, bound);
        p.layers[l].b = Tensor2(1, spec[l].output_dim);
    }
    return p;
}

NetworkParams NetworkParams::zeros(const std::vector<LayerSpec>& spec) {
    validate_spec(spec);
    NetworkParams p;
    p.spec = spec;
    p.layers.resize(spec.size());
    for (std::size_t l = 0; l < spec.size(); ++l) {
        p.layers[l].w = Tensor2(spec[l].output_dim, spec[l].input_dim);
        p.layers[l].b = Tensor2(1, spec[l].output_dim);
    }
    return p;
}

std::vector<double> flatten(const NetworkParams& p) {
    std::vector<double> flat;
    flat.reserve(p.param_count());
    for (const auto& layer : p.layers) {
        flat.insert(flat.end(), layer.w.data.begin(), layer.w.data.end());
        flat.insert(flat.end(), layer.b.data.begin(), layer.b.data.end());
    }
    return flat;
}

void unflatten(const std::vector<double>& flat, NetworkParams& p) {
    if (flat.size() != p.param_count()) throw ShapeError("flat size != param count");
    std::size_t off = 0;
    for (auto& layer : p.layers) {
        std::copy(flat.begin() + off, flat.begin() + off + layer.w.size(), layer.w.data.begin());
        off += layer.w.size();
        std::copy(flat.begin() + off, flat.begin() + off + layer.b.size(), layer.b.data.begin());
        off += layer.b.size();
    }
}

ForwardTrace forward(const NetworkParams& p, const Tensor2& batch_x) {
    if (batch_x.cols != p.input_dim())
        throw ShapeError("batch cols " + std::to_string(batch_x.cols) + " != input dim " +
                         std::to_string(p.input_dim()));
    ForwardTrace trace;
    trace.ys.reserve(p.depth() + 1);
    trace.zs.reserve(p.depth());
    trace.ys.push_back(batch_x);
    for (std::size_t l = 0; l < p.depth(); ++l) {
        const Tensor2& x = trace.ys.back();
        const Tensor2& w = p.layers[l].w;
        const Tensor2& b = p.layers[l].b;
        Tensor2 z(x.rows, w.rows);
        for (std::size_t r = 0; r < x.rows; ++r) {
            for (std::size_t o = 0; o < w.rows; ++o) {
                double acc = b.data[o];
                const double* xr = &x.data[r * x.cols];
                const double* wr = &w.data[o * w.cols];
                for (std::size_t i = 0; i < w.cols; ++i) acc += wr[i] * xr[i];
                z.at(r, o) = acc;
            }
        }
        Tensor2 y;
        apply_activation(p.spec[l].activation, z, y);
        trace.zs.push_back(std::move(z));
        trace.ys.push_back(std::move(y));
    }
    if (!all_finite(trace.ys.back())) throw NumericError("non-finite network output");
    return trace;
}

LossGrad backprop_from_seeds(const NetworkParams& p, const ForwardTrace& trace,
                             const std::vector<Tensor2>& seeds) {
    const std::size_t depth = p.depth();
    if (trace.ys.size() != depth + 1) throw ShapeError("trace does not match network depth");
    if (seeds.size() != depth) throw ShapeError("one seed slot per layer required");

    LossGrad out;
    out.grads.assign(p.param_count(), 0.0);
    out.neuron_grads.resize(depth);

    FlatView view(p.spec);
    Tensor2 dy;  // adjoint of the current layer's activations
    for (std::size_t l = depth; l-- > 0;) {
        const Tensor2& y = trace.ys[l + 1];
        if (dy.empty()) dy = Tensor2(y.rows, y.cols);
        if (!seeds[l].empty()) {
            if (!seeds[l].same_shape(y)) throw ShapeError("seed shape mismatch");
            for (std::size_t i = 0; i < dy.data.size(); ++i) dy.data[i] += seeds[l].data[i];
        }
        out.neuron_grads[l] = dy;

        Tensor2 dz;
        activation_backward(p.spec[l].activation, trace.zs[l], y, dy, dz);

        const Tensor2& x = trace.ys[l];
        const Tensor2& w = p.layers[l].w;
        double* gw = &out.grads[view.spans[l].w_begin];
        double* gb = &out.grads[view.spans[l].b_begin];
        for (std::size_t r = 0; r < dz.rows; ++r) {
            const double* dzr = &dz.data[r * dz.cols];
            const double* xr = &x.data[r * x.cols];
            for (std::size_t o = 0; o < dz.cols; ++o) {
                double d = dzr[o];
                gb[o] += d;
                double* gwo = gw + o * w.cols;
                for (std::size_t i = 0; i < w.cols; ++i) gwo[i] += d * xr[i];
            }
        }
        // adjoint of the layer input: dY_{l-1} = dZ * W
        if (l > 0) {
            Tensor2 dx(x.rows, x.cols);
            for (std::size_t r = 0; r < dz.rows; ++r) {
                const double* dzr = &dz.data[r * dz.cols];
                double* dxr = &dx.data[r * dx.cols];
                for (std::size_t o = 0; o < dz.cols; ++o) {
                    double d = dzr[o];
                    const double* wr = &w.data[o * w.cols];
                    for (std::size_t i = 0; i < w.cols; ++i) dxr[i] += d * wr[i];
                }
            }
            dy = std::move(dx);
        }
    }
    if (!all_finite(out.grads)) throw NumericError("non-finite gradient");
    return out;
}

double cross_entropy_loss(const Tensor2& probs, const std::vector<int>& labels) {
    if (labels.size() != probs.rows) throw ShapeError("label count != batch size");
    double total = 0.0;
    for (std::size_t r = 0; r < probs.rows; ++r) {
        int y = labels[r];
        if (y < 0 || static_cast<std::size_t>(y) >= probs.cols)
            throw ShapeError("label out of range");
        total -= std::log(std::max(probs.at(r, static_cast<std::size_t>(y)), kLogClamp));
    }
    return total / static_cast<double>(probs.rows);
}

double mse_loss(const Tensor2& out, const Tensor2& targets) {
    if (!out.same_shape(targets)) throw ShapeError("target shape mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        double d = out.data[i] - targets.data[i];
        total += d * d;
    }
    return total / static_cast<double>(out.rows);
}

Tensor2 loss_output_seed(const Tensor2& output, const std::vector<int>& labels, Loss kind) {
    if (kind != Loss::cross_entropy) throw ShapeError("labels seed only valid for cross_entropy");
    if (labels.size() != output.rows) throw ShapeError("label count != batch size");
    Tensor2 seed(output.rows, output.cols);
    double inv_n = 1.0 / static_cast<double>(output.rows);
    for (std::size_t r = 0; r < output.rows; ++r) {
        std::size_t y = static_cast<std::size_t>(labels[r]);
        seed.at(r, y) = -inv_n / std::max(output.at(r, y), kLogClamp);
    }
    return seed;
}

Tensor2 one_hot(const std::vector<int>& labels, std::size_t classes) {
    Tensor2 t(labels.size(), classes);
    for (std::size_t r = 0; r < labels.size(); ++r) t.at(r, static_cast<std::size_t>(labels[r])) = 1.0;
    return t;
}

LossGrad backward(const NetworkParams& p, const ForwardTrace& trace,
                  const std::vector<int>& labels, Loss kind) {
    if (kind == Loss::mse) return backward(p, trace, one_hot(labels, p.output_dim()), kind);
    if (p.spec.back().activation != Activation::softmax)
        throw ShapeError("cross_entropy requires a softmax output layer");
    std::vector<Tensor2> seeds(p.depth());
    seeds.back() = loss_output_seed(trace.output(), labels, kind);
    LossGrad lg = backprop_from_seeds(p, trace, seeds);
    lg.loss = cross_entropy_loss(trace.output(), labels);
    if (!std::isfinite(lg.loss)) throw NumericError("non-finite loss");
    return lg;
}

LossGrad backward(const NetworkParams& p, const ForwardTrace& trace, const Tensor2& targets,
                  Loss kind) {
    if (kind != Loss::mse) throw ShapeError("tensor targets only valid for mse");
    const Tensor2& out = trace.output();
    if (!out.same_shape(targets)) throw ShapeError("target shape mismatch");
    Tensor2 seed(out.rows, out.cols);
    double scale = 2.0 / static_cast<double>(out.rows);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        seed.data[i] = scale * (out.data[i] - targets.data[i]);
    std::vector<Tensor2> seeds(p.depth());
    seeds.back() = std::move(seed);
    LossGrad lg = backprop_from_seeds(p, trace, seeds);
    lg.loss = mse_loss(out, targets);
    if (!std::isfinite(lg.loss)) throw NumericError("non-finite loss");
    return lg;
}

}  // namespace mabret
