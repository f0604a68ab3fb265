#include <doctest.h>

#include <cmath>

#include "mabret/adam.hpp"
#include "mabret/network.hpp"
#include "mabret/rng.hpp"

using namespace mabret;

namespace {

NetworkParams identity_net() {
    NetworkParams p = NetworkParams::zeros({{2, 2, Activation::identity}});
    p.layers[0].w.at(0, 0) = 1.0;
    p.layers[0].w.at(1, 1) = 1.0;
    return p;
}

Tensor2 row2(double a, double b) {
    Tensor2 x(1, 2);
    x.at(0, 0) = a;
    x.at(0, 1) = b;
    return x;
}

// central finite differences of the task loss, relative tolerance per entry
void check_against_fd(const NetworkParams& params, const Tensor2& x, const std::vector<int>& labels,
                      Loss kind, double tol = 1e-4) {
    ForwardTrace trace = forward(params, x);
    LossGrad lg = backward(params, trace, labels, kind);
    std::vector<double> flat = flatten(params);
    NetworkParams work = params;
    const double h = 1e-5;
    for (std::size_t s = 0; s < flat.size(); ++s) {
        double keep = flat[s];
        flat[s] = keep + h;
        unflatten(flat, work);
        double up = kind == Loss::cross_entropy
                        ? cross_entropy_loss(forward(work, x).output(), labels)
                        : mse_loss(forward(work, x).output(), one_hot(labels, params.output_dim()));
        flat[s] = keep - h;
        unflatten(flat, work);
        double down = kind == Loss::cross_entropy
                          ? cross_entropy_loss(forward(work, x).output(), labels)
                          : mse_loss(forward(work, x).output(), one_hot(labels, params.output_dim()));
        flat[s] = keep;
        unflatten(flat, work);
        double numeric = (up - down) / (2.0 * h);
        double rel = std::abs(lg.grads[s] - numeric) / (std::abs(numeric) + 1e-8);
        CAPTURE(s);
        CHECK(rel <= tol);
    }
}

}  // namespace

TEST_CASE("forward: identity weights pass the input through") {
    NetworkParams p = identity_net();
    ForwardTrace t = forward(p, row2(1.0, 2.0));
    CHECK(t.output().at(0, 0) == doctest::Approx(1.0));
    CHECK(t.output().at(0, 1) == doctest::Approx(2.0));
}

TEST_CASE("forward: uniform logits softmax to 1/3") {
    NetworkParams p = NetworkParams::zeros({{3, 3, Activation::softmax}});
    Tensor2 x(1, 3);
    ForwardTrace t = forward(p, x);
    for (std::size_t c = 0; c < 3; ++c) CHECK(t.output().at(0, c) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("forward: two-layer relu net matches hand evaluation") {
    NetworkParams p = NetworkParams::zeros(
        {{2, 2, Activation::relu}, {2, 2, Activation::relu}});
    p.layers[0].w.at(0, 0) = 1.0;
    p.layers[0].w.at(0, 1) = -2.0;
    p.layers[0].w.at(1, 0) = -3.0;
    p.layers[0].w.at(1, 1) = 4.0;
    p.layers[0].b.at(0, 0) = 0.5;
    p.layers[0].b.at(0, 1) = -0.5;
    p.layers[1].w.at(0, 0) = 1.0;
    p.layers[1].w.at(0, 1) = 1.0;
    p.layers[1].w.at(1, 0) = -1.0;
    p.layers[1].w.at(1, 1) = 2.0;
    p.layers[1].b.at(0, 0) = 0.25;
    p.layers[1].b.at(0, 1) = 0.75;

    // x=[1,-1]: z1 = [3.5, -7.5] -> y1 = [3.5, 0]; z2 = [3.75, -2.75] -> y2 = [3.75, 0]
    ForwardTrace t = forward(p, row2(1.0, -1.0));
    CHECK(t.ys[1].at(0, 0) == doctest::Approx(3.5));
    CHECK(t.ys[1].at(0, 1) == doctest::Approx(0.0));
    CHECK(t.output().at(0, 0) == doctest::Approx(3.75));
    CHECK(t.output().at(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("forward: input width mismatch raises a shape error") {
    NetworkParams p = identity_net();
    Tensor2 x(1, 3);
    CHECK_THROWS_AS(forward(p, x), ShapeError);
}

TEST_CASE("forward: softmax rows sum to one") {
    auto rng = make_rng(11);
    NetworkParams p = NetworkParams::init(
        {{4, 6, Activation::relu}, {6, 3, Activation::softmax}}, 5);
    Tensor2 x(8, 4);
    for (double& v : x.data) v = normal01(rng);
    ForwardTrace t = forward(p, x);
    for (std::size_t r = 0; r < 8; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < 3; ++c) sum += t.output().at(r, c);
        CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
}

TEST_CASE("spec validation rejects softmax on hidden layers") {
    CHECK_THROWS_AS(
        NetworkParams::zeros({{2, 2, Activation::softmax}, {2, 2, Activation::identity}}),
        ShapeError);
}

TEST_CASE("backward: zero net with zero targets has zero gradients") {
    NetworkParams p = NetworkParams::zeros({{2, 1, Activation::identity}});
    Tensor2 x = row2(0.3, -0.7);
    Tensor2 targets(1, 1);
    ForwardTrace t = forward(p, x);
    LossGrad lg = backward(p, t, targets, Loss::mse);
    CHECK(lg.loss == doctest::Approx(0.0));
    for (double g : lg.grads) CHECK(g == 0.0);
}

TEST_CASE("backward: gradients match central finite differences on a 3-5-2 net") {
    NetworkParams p = NetworkParams::init(
        {{3, 5, Activation::tanh}, {5, 2, Activation::softmax}}, 42);
    auto rng = make_rng(7);
    Tensor2 x(4, 3);
    for (double& v : x.data) v = normal01(rng);
    std::vector<int> labels = {0, 1, 1, 0};
    check_against_fd(p, x, labels, Loss::cross_entropy);

    NetworkParams q = NetworkParams::init(
        {{3, 5, Activation::sigmoid}, {5, 2, Activation::identity}}, 43);
    check_against_fd(q, x, labels, Loss::mse);
}

TEST_CASE("backward: softmax+cross-entropy logit gradient is (p - onehot)/batch") {
    NetworkParams p = NetworkParams::init({{3, 4, Activation::softmax}}, 9);
    auto rng = make_rng(21);
    Tensor2 x(3, 3);
    for (double& v : x.data) v = normal01(rng);
    std::vector<int> labels = {2, 0, 3};
    ForwardTrace t = forward(p, x);
    LossGrad lg = backward(p, t, labels, Loss::cross_entropy);

    // bias gradient of the output layer accumulates dL/dZ over the batch
    FlatView view(p.spec);
    const Tensor2& probs = t.output();
    for (std::size_t c = 0; c < 4; ++c) {
        double expected = 0.0;
        for (std::size_t r = 0; r < 3; ++r) {
            double onehot = labels[r] == static_cast<int>(c) ? 1.0 : 0.0;
            expected += (probs.at(r, c) - onehot) / 3.0;
        }
        CHECK(lg.grads[view.bias_index(0, c)] == doctest::Approx(expected).epsilon(1e-10));
    }
    CHECK(lg.loss >= 0.0);
}

TEST_CASE("backward: label shape mismatch raises") {
    NetworkParams p = NetworkParams::init({{2, 2, Activation::softmax}}, 1);
    ForwardTrace t = forward(p, row2(0.1, 0.2));
    std::vector<int> labels = {0, 1};
    CHECK_THROWS_AS(backward(p, t, labels, Loss::cross_entropy), ShapeError);
}

TEST_CASE("adam: all-zero mask leaves parameters untouched") {
    NetworkParams p = NetworkParams::init({{2, 3, Activation::tanh}, {3, 2, Activation::identity}}, 3);
    std::vector<double> before = flatten(p);
    AdamState st = AdamState::make(p.param_count());
    std::vector<double> grads(p.param_count(), 1.0);
    GradMask none = GradMask::zeros(p.param_count());
    adam_step(p, grads, &none, st);
    CHECK(flatten(p) == before);
}

TEST_CASE("adam: all-ones mask reproduces the unmasked update bit-exactly") {
    NetworkParams a = NetworkParams::init({{2, 3, Activation::tanh}, {3, 2, Activation::identity}}, 3);
    NetworkParams b = a;
    AdamState sa = AdamState::make(a.param_count());
    AdamState sb = AdamState::make(b.param_count());
    auto rng = make_rng(5);
    for (int step = 0; step < 7; ++step) {
        std::vector<double> grads(a.param_count());
        for (double& g : grads) g = normal01(rng);
        GradMask all = GradMask::ones(a.param_count());
        adam_step(a, grads, &all, sa);
        adam_step(b, grads, nullptr, sb);
    }
    CHECK(flatten(a) == flatten(b));
}

TEST_CASE("adam: freezing one layer leaves it bit-identical and the rest unmasked") {
    std::vector<LayerSpec> spec = {{2, 3, Activation::tanh}, {3, 2, Activation::identity}};
    NetworkParams masked = NetworkParams::init(spec, 3);
    NetworkParams reference = masked;
    FlatView view(spec);

    GradMask freeze_l2 = GradMask::ones(masked.param_count());
    for (std::size_t s = view.spans[1].w_begin; s < view.spans[1].end; ++s) freeze_l2.bits[s] = 0;

    AdamState sm = AdamState::make(masked.param_count());
    AdamState sr = AdamState::make(reference.param_count());
    std::vector<double> frozen_before = flatten(masked);
    auto rng = make_rng(17);
    for (int step = 0; step < 5; ++step) {
        std::vector<double> grads(masked.param_count());
        for (double& g : grads) g = normal01(rng);
        adam_step(masked, grads, &freeze_l2, sm);
        adam_step(reference, grads, nullptr, sr);
    }
    std::vector<double> fm = flatten(masked);
    std::vector<double> fr = flatten(reference);
    for (std::size_t s = 0; s < fm.size(); ++s) {
        if (s >= view.spans[1].w_begin) {
            CHECK(fm[s] == frozen_before[s]);  // frozen layer untouched
        } else {
            CHECK(fm[s] == fr[s]);  // unmasked layer identical to the reference run
        }
    }
}

TEST_CASE("flat view: 2x2 layer plus bias is six scalars with identity round-trip") {
    std::vector<LayerSpec> spec = {{2, 2, Activation::identity}};
    NetworkParams p = NetworkParams::init(spec, 8);
    CHECK(p.param_count() == 6);
    std::vector<double> flat = flatten(p);
    CHECK(flat.size() == 6);
    NetworkParams q = NetworkParams::zeros(spec);
    unflatten(flat, q);
    CHECK(flatten(q) == flat);
}

TEST_CASE("flat view: layout indices are frozen constants of the spec") {
    std::vector<LayerSpec> spec = {{3, 5, Activation::relu}, {5, 2, Activation::softmax}};
    FlatView view(spec);
    CHECK(view.weight_index(0, 0, 0, spec) == 0);
    CHECK(view.bias_index(0, 0) == 15);
    CHECK(view.weight_index(1, 0, 0, spec) == 20);  // 3*5 weights + 5 biases
    CHECK(view.bias_index(1, 1) == 31);
    CHECK(view.total == 32);
    FlatView again(spec);
    CHECK(again.weight_index(1, 0, 0, spec) == 20);
}

TEST_CASE("flat view: random params survive flatten/unflatten bit-exactly") {
    NetworkParams p = NetworkParams::init(
        {{4, 7, Activation::relu}, {7, 3, Activation::softmax}}, 123);
    std::vector<double> flat = flatten(p);
    NetworkParams q = NetworkParams::zeros(p.spec);
    unflatten(flat, q);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        CHECK(p.layers[l].w.data == q.layers[l].w.data);
        CHECK(p.layers[l].b.data == q.layers[l].b.data);
    }
}

TEST_CASE("property: frozen scalars stay bit-identical under random masks") {
    auto rng = make_rng(99);
    std::vector<LayerSpec> spec = {{3, 4, Activation::tanh}, {4, 2, Activation::identity}};
    for (int trial = 0; trial < 10; ++trial) {
        NetworkParams p = NetworkParams::init(spec, 1000 + static_cast<std::uint64_t>(trial));
        GradMask mask = GradMask::ones(p.param_count());
        for (auto& bit : mask.bits) bit = uniform01(rng) < 0.5 ? 1 : 0;
        std::vector<double> before = flatten(p);
        AdamState st = AdamState::make(p.param_count());
        for (int step = 0; step < 20; ++step) {
            std::vector<double> grads(p.param_count());
            for (double& g : grads) g = normal01(rng);
            adam_step(p, grads, &mask, st);
        }
        std::vector<double> after = flatten(p);
        for (std::size_t s = 0; s < before.size(); ++s)
            if (!mask.bits[s]) CHECK(after[s] == before[s]);
    }
}

TEST_CASE("property: finite-difference agreement on random small nets") {
    auto rng = make_rng(2024);
    for (int trial = 0; trial < 5; ++trial) {
        NetworkParams p = NetworkParams::init(
            {{2, 4, Activation::relu}, {4, 3, Activation::softmax}},
            300 + static_cast<std::uint64_t>(trial));
        Tensor2 x(3, 2);
        for (double& v : x.data) v = normal01(rng) * 0.5;
        std::vector<int> labels = {static_cast<int>(uniform_index(rng, 3)),
                                   static_cast<int>(uniform_index(rng, 3)),
                                   static_cast<int>(uniform_index(rng, 3))};
        check_against_fd(p, x, labels, Loss::cross_entropy);
    }
}

TEST_CASE("determinism: same seed gives a bit-identical parameter trajectory") {
    auto run = [] {
        NetworkParams p = NetworkParams::init(
            {{2, 4, Activation::relu}, {4, 2, Activation::softmax}}, 77);
        AdamState st = AdamState::make(p.param_count());
        auto rng = make_rng(55);
        Tensor2 x(4, 2);
        for (double& v : x.data) v = normal01(rng);
        std::vector<int> labels = {0, 1, 0, 1};
        for (int step = 0; step < 25; ++step) {
            ForwardTrace t = forward(p, x);
            LossGrad lg = backward(p, t, labels, Loss::cross_entropy);
            adam_step(p, lg.grads, nullptr, st);
        }
        return flatten(p);
    };
    CHECK(run() == run());
}
