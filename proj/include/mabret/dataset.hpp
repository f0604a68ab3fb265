#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mabret/tensor.hpp"

namespace mabret {

struct Dataset {
    Tensor2 features;  // n x d
    std::vector<int> labels;
    int class_count = 0;
    std::string provenance;

    std::size_t size() const { return labels.size(); }
};

/// SEA-style concept-drift stream: three uniform features on [0,10], label 1
/// iff f1 + f2 <= threshold, with per-segment thresholds and label noise.
struct DriftSpec {
    std::size_t n_per_segment = 12500;
    std::vector<double> thresholds = {8.0, 9.0, 7.0, 9.5};
    double noise_rate = 0.1;  // in [0, 0.5)
};

Dataset generate_sea(const DriftSpec& spec, std::uint64_t seed);

/// Big-endian IDX pair (magic 0x803 images / 0x801 labels); pixels scaled to [0,1].
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Numeric CSV with a header row; the label column holds integer class ids.
/// Malformed cells are reported with their line number. Features are returned
/// raw; z-scoring happens against training-split statistics via Normalizer.
Dataset load_csv(const std::string& path, const std::string& label_column,
                 const std::vector<std::string>& expected_columns = {});

/// Z-score transform fitted on one index subset (the training split) and then
/// applied to the whole dataset.
struct Normalizer {
    std::vector<double> mean;
    std::vector<double> stddev;

    static Normalizer fit(const Dataset& data, const std::vector<std::size_t>& train_ids);
    void apply(Dataset& data) const;
};

/// Rows/labels for an id subset, e.g. an evaluation slice.
struct EvalSet {
    Tensor2 x;
    std::vector<int> labels;
};

EvalSet gather(const Dataset& data, const std::vector<std::size_t>& ids);

}  // namespace mabret
