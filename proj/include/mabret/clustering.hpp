#pragma once

#include <cstdint>
#include <vector>

#include "mabret/network.hpp"

namespace mabret {

/// Flat parameter snapshots taken at the end of each training epoch.
struct TrajectoryLog {
    std::size_t param_count = 0;
    std::vector<std::vector<double>> snapshots;

    void record(const std::vector<double>& flat_params);
    std::size_t epochs() const { return snapshots.size(); }
};

/// Per-weight feature vectors: the consecutive-epoch deltas over the last
/// ceil(tail_fraction * E) epochs. Rows are parameters in flat order. Weights
/// that move in tandem get identical rows regardless of their offsets.
Tensor2 feature_matrix(const TrajectoryLog& log, double tail_fraction = 0.2);

struct KMeansResult {
    std::vector<int> labels;
    Tensor2 centroids;  // k x dim
    double sse = 0.0;
    int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding; an emptied cluster is reseeded
/// from the point farthest from its centroid.
KMeansResult kmeans(const Tensor2& points, int k, std::uint64_t seed, int max_iter = 100);

struct LayerClustering {
    std::vector<std::vector<int>> labels;  // per layer, per parameter of that layer
    std::vector<int> k_per_layer;
};

/// Cluster each layer's parameters (weights and biases together) on their
/// trajectory features. k is capped by the layer's parameter count.
LayerClustering cluster_layers(const Tensor2& features, const std::vector<LayerSpec>& spec,
                               int k, std::uint64_t seed);

struct ClusterArm {
    int id = 0;
    std::vector<std::size_t> members;  // global flat indices
};

/// K = max_l k_l arms; each arm takes one not-yet-used cluster uniformly from
/// every layer that still has unused clusters, so the arms partition all
/// weights. Later arms may touch only the deepest-clustered layers.
std::vector<ClusterArm> assemble_arms(const LayerClustering& clustering,
                                      const std::vector<LayerSpec>& spec, std::uint64_t seed);

GradMask arm_mask(const ClusterArm& arm, std::size_t param_count);

/// Largest second difference of SSE(k) over a sweep; the elbow pick.
int elbow_k(const std::vector<double>& sse_by_k, int k_min = 1);

}  // namespace mabret
