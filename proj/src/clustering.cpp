#include "mabret/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mabret/rng.hpp"

namespace mabret {

void TrajectoryLog::record(const std::vector<double>& flat_params) {
    if (param_count == 0) param_count = flat_params.size();
    if (flat_params.size() != param_count)
        throw ShapeError("trajectory snapshot length changed");
    snapshots.push_back(flat_params);
}

Tensor2 feature_matrix(const TrajectoryLog& log, double tail_fraction) {
    const std::size_t epochs = log.epochs();
    if (epochs < 2) throw std::invalid_argument("feature_matrix: need at least 2 epochs");
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
        throw std::invalid_argument("feature_matrix: tail_fraction in (0,1]");

    std::size_t tail = static_cast<std::size_t>(
        std::ceil(tail_fraction * static_cast<double>(epochs)));
    tail = std::min(tail, epochs - 1);  // at most E-1 deltas exist
    const std::size_t first = epochs - tail;

    Tensor2 features(log.param_count, tail);
    for (std::size_t e = 0; e < tail; ++e) {
        const std::vector<double>& cur = log.snapshots[first + e];
        const std::vector<double>& prev = log.snapshots[first + e - 1];
        for (std::size_t s = 0; s < log.param_count; ++s)
            features.at(s, e) = cur[s] - prev[s];
    }
    return features;
}

namespace {

double sq_dist(const Tensor2& points, std::size_t p, const Tensor2& centroids, std::size_t c) {
    double d = 0.0;
    const double* a = &points.data[p * points.cols];
    const double* b = &centroids.data[c * centroids.cols];
    for (std::size_t i = 0; i < points.cols; ++i) {
        double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

void kmeanspp_seed(const Tensor2& points, int k, std::mt19937_64& rng, Tensor2& centroids) {
    const std::size_t n = points.rows;
    std::vector<double> best_d(n, std::numeric_limits<double>::infinity());
    std::size_t first = static_cast<std::size_t>(uniform_index(rng, n));
    for (std::size_t i = 0; i < points.cols; ++i) centroids.at(0, i) = points.at(first, i);
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            double d = sq_dist(points, p, centroids, static_cast<std::size_t>(c - 1));
            if (d < best_d[p]) best_d[p] = d;
            total += best_d[p];
        }
        std::size_t pick;
        if (total <= 0.0) {
            pick = static_cast<std::size_t>(uniform_index(rng, n));
        } else {
            double u = uniform01(rng) * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t p = 0; p < n; ++p) {
                acc += best_d[p];
                if (u < acc) {
                    pick = p;
                    break;
                }
            }
        }
        for (std::size_t i = 0; i < points.cols; ++i)
            centroids.at(static_cast<std::size_t>(c), i) = points.at(pick, i);
    }
}

}  // namespace

KMeansResult kmeans(const Tensor2& points, int k, std::uint64_t seed, int max_iter) {
    if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
    if (static_cast<std::size_t>(k) > points.rows)
        throw std::invalid_argument("kmeans: k exceeds number of points");

    const std::size_t n = points.rows;
    const std::size_t dim = points.cols;
    auto rng = make_rng(seed);

    KMeansResult res;
    res.centroids = Tensor2(static_cast<std::size_t>(k), dim);
    res.labels.assign(n, 0);
    kmeanspp_seed(points, k, rng, res.centroids);

    std::vector<std::size_t> counts(static_cast<std::size_t>(k));
    for (int iter = 0; iter < max_iter; ++iter) {
        bool changed = iter == 0;
        for (std::size_t p = 0; p < n; ++p) {
            std::size_t best = 0;
            double bd = sq_dist(points, p, res.centroids, 0);
            for (std::size_t c = 1; c < static_cast<std::size_t>(k); ++c) {
                double d = sq_dist(points, p, res.centroids, c);
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            if (res.labels[p] != static_cast<int>(best)) {
                res.labels[p] = static_cast<int>(best);
                changed = true;
            }
        }
        res.iterations = iter + 1;
        if (!changed) break;

        std::fill(counts.begin(), counts.end(), 0);
        std::fill(res.centroids.data.begin(), res.centroids.data.end(), 0.0);
        for (std::size_t p = 0; p < n; ++p) {
            std::size_t c = static_cast<std::size_t>(res.labels[p]);
            counts[c] += 1;
            for (std::size_t i = 0; i < dim; ++i) res.centroids.at(c, i) += points.at(p, i);
        }
        for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
            if (counts[c] == 0) {
                // reseed from the point farthest from its current centroid
                std::size_t far_p = 0;
                double far_d = -1.0;
                for (std::size_t p = 0; p < n; ++p) {
                    double d = sq_dist(points, p, res.centroids,
                                       static_cast<std::size_t>(res.labels[p]));
                    if (d > far_d) {
                        far_d = d;
                        far_p = p;
                    }
                }
                for (std::size_t i = 0; i < dim; ++i)
                    res.centroids.at(c, i) = points.at(far_p, i);
            } else {
                for (std::size_t i = 0; i < dim; ++i)
                    res.centroids.at(c, i) /= static_cast<double>(counts[c]);
            }
        }
    }

    res.sse = 0.0;
    for (std::size_t p = 0; p < n; ++p)
        res.sse += sq_dist(points, p, res.centroids, static_cast<std::size_t>(res.labels[p]));
    return res;
}

LayerClustering cluster_layers(const Tensor2& features, const std::vector<LayerSpec>& spec,
                               int k, std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("cluster_layers: k must be >= 1");
    FlatView view(spec);
    if (features.rows != view.total) throw ShapeError("cluster_layers: feature rows != params");

    LayerClustering out;
    out.labels.resize(spec.size());
    out.k_per_layer.resize(spec.size());
    for (std::size_t l = 0; l < spec.size(); ++l) {
        const std::size_t begin = view.spans[l].w_begin;
        const std::size_t count = view.spans[l].end - begin;
        Tensor2 pts(count, features.cols);
        std::copy(features.data.begin() + static_cast<std::ptrdiff_t>(begin * features.cols),
                  features.data.begin() + static_cast<std::ptrdiff_t>((begin + count) * features.cols),
                  pts.data.begin());
        int kl = std::min<int>(k, static_cast<int>(count));
        KMeansResult km = kmeans(pts, kl, derive_seed(seed, "kmeans-layer", l));
        out.labels[l] = std::move(km.labels);
        out.k_per_layer[l] = kl;
    }
    return out;
}

std::vector<ClusterArm> assemble_arms(const LayerClustering& clustering,
                                      const std::vector<LayerSpec>& spec, std::uint64_t seed) {
    if (clustering.labels.empty()) throw std::invalid_argument("assemble_arms: nothing clustered");
    FlatView view(spec);
    auto rng = make_rng(derive_seed(seed, "arm-assembly"));

    int arm_count = 0;
    for (int kl : clustering.k_per_layer) arm_count = std::max(arm_count, kl);

    // unused cluster labels per layer
    std::vector<std::vector<int>> unused(spec.size());
    for (std::size_t l = 0; l < spec.size(); ++l) {
        unused[l].resize(static_cast<std::size_t>(clustering.k_per_layer[l]));
        for (int c = 0; c < clustering.k_per_layer[l]; ++c)
            unused[l][static_cast<std::size_t>(c)] = c;
    }

    std::vector<ClusterArm> arms(static_cast<std::size_t>(arm_count));
    for (int a = 0; a < arm_count; ++a) {
        arms[static_cast<std::size_t>(a)].id = a;
        for (std::size_t l = 0; l < spec.size(); ++l) {
            if (unused[l].empty()) continue;
            std::size_t pick = static_cast<std::size_t>(uniform_index(rng, unused[l].size()));
            int label = unused[l][pick];
            unused[l].erase(unused[l].begin() + static_cast<std::ptrdiff_t>(pick));
            const std::size_t begin = view.spans[l].w_begin;
            const std::vector<int>& lab = clustering.labels[l];
            for (std::size_t s = 0; s < lab.size(); ++s)
                if (lab[s] == label) arms[static_cast<std::size_t>(a)].members.push_back(begin + s);
        }
        std::sort(arms[static_cast<std::size_t>(a)].members.begin(),
                  arms[static_cast<std::size_t>(a)].members.end());
    }
    return arms;
}

GradMask arm_mask(const ClusterArm& arm, std::size_t param_count) {
    GradMask mask = GradMask::zeros(param_count);
    for (std::size_t s : arm.members) mask.bits[s] = 1;
    return mask;
}

int elbow_k(const std::vector<double>& sse_by_k, int k_min) {
    if (sse_by_k.size() < 3) return k_min;
    int best = k_min + 1;
    double best_gain = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < sse_by_k.size(); ++i) {
        double second_diff = sse_by_k[i - 1] - 2.0 * sse_by_k[i] + sse_by_k[i + 1];
        if (second_diff > best_gain) {
            best_gain = second_diff;
            best = k_min + static_cast<int>(i);
        }
    }
    return best;
}

}  // namespace mabret
