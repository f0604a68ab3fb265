#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mabret/clustering.hpp"
#include "mabret/rng.hpp"

using namespace mabret;

namespace {

TrajectoryLog log_from_series(const std::vector<std::vector<double>>& per_epoch) {
    TrajectoryLog log;
    for (const auto& snap : per_epoch) log.record(snap);
    return log;
}

// brute force: best SSE over all assignments of n points into 2 clusters
double best_two_partition_sse(const Tensor2& pts) {
    const std::size_t n = pts.rows;
    double best = std::numeric_limits<double>::infinity();
    for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
        double sse = 0.0;
        for (int side = 0; side < 2; ++side) {
            std::vector<std::size_t> members;
            for (std::size_t p = 0; p < n; ++p)
                if (((mask >> p) & 1u) == static_cast<std::uint32_t>(side)) members.push_back(p);
            if (members.empty()) continue;
            for (std::size_t d = 0; d < pts.cols; ++d) {
                double mean = 0.0;
                for (std::size_t p : members) mean += pts.at(p, d);
                mean /= static_cast<double>(members.size());
                for (std::size_t p : members) {
                    double diff = pts.at(p, d) - mean;
                    sse += diff * diff;
                }
            }
        }
        best = std::min(best, sse);
    }
    return best;
}

}  // namespace

TEST_CASE("feature_matrix: constant weight gives an all-zero feature vector") {
    TrajectoryLog log = log_from_series({{2.0, 5.0}, {2.0, 5.5}, {2.0, 6.5}, {2.0, 6.0}, {2.0, 7.0}});
    Tensor2 f = feature_matrix(log, 0.2);
    for (std::size_t c = 0; c < f.cols; ++c) CHECK(f.at(0, c) == 0.0);
}

TEST_CASE("feature_matrix: tail slicing keeps the last deltas") {
    // series [0,1,2,3,4], tail 0.4 -> ceil(0.4*5)=2 deltas: [1,1]
    TrajectoryLog log = log_from_series({{0.0}, {1.0}, {2.0}, {3.0}, {4.0}});
    Tensor2 f = feature_matrix(log, 0.4);
    REQUIRE(f.cols == 2);
    CHECK(f.at(0, 0) == doctest::Approx(1.0));
    CHECK(f.at(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("feature_matrix: weights moving in tandem share a feature vector") {
    // w2 = w1 + 5 throughout; deltas cancel the offset
    std::vector<std::vector<double>> series;
    double w = 0.3;
    for (int e = 0; e < 6; ++e) {
        series.push_back({w, w + 5.0});
        w += 0.1 * (e + 1);
    }
    Tensor2 f = feature_matrix(log_from_series(series), 0.5);
    for (std::size_t c = 0; c < f.cols; ++c) CHECK(f.at(0, c) == doctest::Approx(f.at(1, c)));
}

TEST_CASE("feature_matrix: translation invariance of one weight's whole trajectory") {
    std::vector<std::vector<double>> series, shifted;
    auto rng = make_rng(3);
    double w = 0.0;
    for (int e = 0; e < 8; ++e) {
        w += normal01(rng);
        series.push_back({w});
        shifted.push_back({w + 123.25});
    }
    Tensor2 a = feature_matrix(log_from_series(series), 0.3);
    Tensor2 b = feature_matrix(log_from_series(shifted), 0.3);
    for (std::size_t c = 0; c < a.cols; ++c) CHECK(a.at(0, c) == doctest::Approx(b.at(0, c)));
}

TEST_CASE("feature_matrix: fewer than two epochs is invalid") {
    TrajectoryLog log = log_from_series({{1.0}});
    CHECK_THROWS_AS(feature_matrix(log, 0.2), std::invalid_argument);
}

TEST_CASE("kmeans: k=1 yields one label and the mean centroid") {
    Tensor2 pts(4, 1);
    pts.at(0, 0) = 1.0;
    pts.at(1, 0) = 2.0;
    pts.at(2, 0) = 3.0;
    pts.at(3, 0) = 6.0;
    KMeansResult res = kmeans(pts, 1, 5);
    for (int l : res.labels) CHECK(l == 0);
    CHECK(res.centroids.at(0, 0) == doctest::Approx(3.0));
}

TEST_CASE("kmeans: two separated blobs match the brute-force optimum") {
    Tensor2 pts(4, 1);
    pts.at(0, 0) = 0.0;
    pts.at(1, 0) = 0.1;
    pts.at(2, 0) = 10.0;
    pts.at(3, 0) = 10.1;
    KMeansResult res = kmeans(pts, 2, 7);
    CHECK(res.labels[0] == res.labels[1]);
    CHECK(res.labels[2] == res.labels[3]);
    CHECK(res.labels[0] != res.labels[2]);
    CHECK(res.sse == doctest::Approx(best_two_partition_sse(pts)));
}

TEST_CASE("kmeans: k equal to point count gives zero SSE") {
    Tensor2 pts(5, 2);
    auto rng = make_rng(9);
    for (double& v : pts.data) v = normal01(rng);
    KMeansResult res = kmeans(pts, 5, 11);
    CHECK(res.sse == doctest::Approx(0.0));
    std::vector<int> sorted = res.labels;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 5; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("kmeans: k above the point count is invalid") {
    Tensor2 pts(3, 1);
    CHECK_THROWS_AS(kmeans(pts, 4, 1), std::invalid_argument);
}

TEST_CASE("kmeans: deterministic for a fixed seed") {
    Tensor2 pts(40, 3);
    auto rng = make_rng(13);
    for (double& v : pts.data) v = normal01(rng);
    KMeansResult a = kmeans(pts, 4, 99);
    KMeansResult b = kmeans(pts, 4, 99);
    CHECK(a.labels == b.labels);
    CHECK(a.centroids.data == b.centroids.data);
}

TEST_CASE("assemble_arms: one layer with k=3 gives three single-cluster arms") {
    std::vector<LayerSpec> spec = {{2, 2, Activation::identity}};  // 6 params
    LayerClustering lc;
    lc.labels = {{0, 1, 2, 0, 1, 2}};
    lc.k_per_layer = {3};
    std::vector<ClusterArm> arms = assemble_arms(lc, spec, 17);
    REQUIRE(arms.size() == 3);
    std::size_t covered = 0;
    for (const auto& arm : arms) {
        CHECK(arm.members.size() == 2);
        covered += arm.members.size();
    }
    CHECK(covered == 6);
}

TEST_CASE("assemble_arms: layer with a single cluster appears in exactly one arm") {
    // layer 1: 3 clusters over 6 params; layer 2: 1 cluster over 3 params
    std::vector<LayerSpec> spec = {{2, 2, Activation::identity}, {2, 1, Activation::identity}};
    LayerClustering lc;
    lc.labels = {{0, 1, 2, 0, 1, 2}, {0, 0, 0}};
    lc.k_per_layer = {3, 1};
    std::vector<ClusterArm> arms = assemble_arms(lc, spec, 21);
    REQUIRE(arms.size() == 3);
    FlatView view(spec);
    int arms_with_layer2 = 0;
    for (const auto& arm : arms) {
        bool has_l2 = false;
        for (std::size_t s : arm.members)
            if (s >= view.spans[1].w_begin) has_l2 = true;
        if (has_l2) ++arms_with_layer2;
    }
    CHECK(arms_with_layer2 == 1);  // later arms may be single-layer only
}

TEST_CASE("assemble_arms: arms always partition the full weight set") {
    auto rng = make_rng(31);
    std::vector<LayerSpec> spec = {{3, 4, Activation::relu}, {4, 2, Activation::softmax}};
    FlatView view(spec);
    for (std::uint64_t trial = 0; trial < 10; ++trial) {
        LayerClustering lc;
        lc.labels.resize(spec.size());
        lc.k_per_layer.resize(spec.size());
        for (std::size_t l = 0; l < spec.size(); ++l) {
            std::size_t count = view.spans[l].end - view.spans[l].w_begin;
            int k = 1 + static_cast<int>(uniform_index(rng, 4));
            lc.k_per_layer[l] = k;
            lc.labels[l].resize(count);
            // every label in [0,k) must occur at least once
            for (std::size_t s = 0; s < count; ++s)
                lc.labels[l][s] = s < static_cast<std::size_t>(k)
                                      ? static_cast<int>(s)
                                      : static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(k)));
        }
        std::vector<ClusterArm> arms = assemble_arms(lc, spec, trial);
        std::vector<int> hit(view.total, 0);
        for (const auto& arm : arms)
            for (std::size_t s : arm.members) hit[s] += 1;
        for (int h : hit) CHECK(h == 1);
        int max_k = *std::max_element(lc.k_per_layer.begin(), lc.k_per_layer.end());
        CHECK(arms.size() == static_cast<std::size_t>(max_k));
    }
}

TEST_CASE("assemble_arms: deterministic for a fixed seed") {
    std::vector<LayerSpec> spec = {{2, 3, Activation::identity}};
    LayerClustering lc;
    lc.labels = {{0, 1, 2, 1, 0, 2, 1, 0, 2}};
    lc.k_per_layer = {3};
    auto a = assemble_arms(lc, spec, 77);
    auto b = assemble_arms(lc, spec, 77);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].members == b[i].members);
}

TEST_CASE("elbow: largest second difference of SSE(k)") {
    // sharp elbow at k=3
    std::vector<double> sse = {100.0, 60.0, 20.0, 18.0, 17.0};
    CHECK(elbow_k(sse, 1) == 3);
}
