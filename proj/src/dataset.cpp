#include "mabret/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mabret/rng.hpp"

namespace mabret {

Dataset generate_sea(const DriftSpec& spec, std::uint64_t seed) {
    if (spec.thresholds.empty()) throw std::invalid_argument("generate_sea: no segments");
    if (!(spec.noise_rate >= 0.0 && spec.noise_rate < 0.5))
        throw std::invalid_argument("generate_sea: noise rate in [0, 0.5)");
    for (double t : spec.thresholds)
        if (!std::isfinite(t)) throw std::invalid_argument("generate_sea: non-finite threshold");

    const std::size_t n = spec.n_per_segment * spec.thresholds.size();
    Dataset ds;
    ds.features = Tensor2(n, 3);
    ds.labels.resize(n);
    ds.class_count = 2;
    ds.provenance = "sea-synthetic";
    auto rng = make_rng(seed);
    std::size_t row = 0;
    for (double threshold : spec.thresholds) {
        for (std::size_t i = 0; i < spec.n_per_segment; ++i, ++row) {
            double f1 = uniform_range(rng, 0.0, 10.0);
            double f2 = uniform_range(rng, 0.0, 10.0);
            double f3 = uniform_range(rng, 0.0, 10.0);
            ds.features.at(row, 0) = f1;
            ds.features.at(row, 1) = f2;
            ds.features.at(row, 2) = f3;
            int label = (f1 + f2 <= threshold) ? 1 : 0;
            if (spec.noise_rate > 0.0 && uniform01(rng) < spec.noise_rate) label = 1 - label;
            ds.labels[row] = label;
        }
    }
    return ds;
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) throw std::runtime_error(path + ": truncated header");
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error("cannot open " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error("cannot open " + labels_path);

    std::uint32_t img_magic = read_be32(img, images_path);
    if (img_magic != 0x00000803u)
        throw std::runtime_error(images_path + ": bad magic (expected 0x00000803)");
    std::uint32_t count = read_be32(img, images_path);
    std::uint32_t rows = read_be32(img, images_path);
    std::uint32_t cols = read_be32(img, images_path);

    std::uint32_t lab_magic = read_be32(lab, labels_path);
    if (lab_magic != 0x00000801u)
        throw std::runtime_error(labels_path + ": bad magic (expected 0x00000801)");
    std::uint32_t lab_count = read_be32(lab, labels_path);
    if (count != lab_count)
        throw std::runtime_error("image/label count mismatch: " + std::to_string(count) + " vs " +
                                 std::to_string(lab_count));

    const std::size_t dim = static_cast<std::size_t>(rows) * cols;
    Dataset ds;
    ds.features = Tensor2(count, dim);
    ds.labels.resize(count);
    ds.provenance = images_path;

    std::vector<unsigned char> pixel_buf(dim);
    for (std::uint32_t i = 0; i < count; ++i) {
        img.read(reinterpret_cast<char*>(pixel_buf.data()), static_cast<std::streamsize>(dim));
        if (!img) throw std::runtime_error(images_path + ": truncated pixel data");
        for (std::size_t p = 0; p < dim; ++p)
            ds.features.at(i, p) = static_cast<double>(pixel_buf[p]) / 255.0;
        char l;
        lab.read(&l, 1);
        if (!lab) throw std::runtime_error(labels_path + ": truncated label data");
        ds.labels[i] = static_cast<int>(static_cast<unsigned char>(l));
    }
    int max_label = 0;
    for (int l : ds.labels) max_label = std::max(max_label, l);
    ds.class_count = max_label + 1;
    return ds;
}

Dataset load_csv(const std::string& path, const std::string& label_column,
                 const std::vector<std::string>& expected_columns) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    if (!expected_columns.empty() && header != expected_columns)
        throw std::runtime_error(path + ": header does not match expected schema");
    std::ptrdiff_t label_idx = -1;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == label_column) label_idx = static_cast<std::ptrdiff_t>(i);
    if (label_idx < 0)
        throw std::runtime_error(path + ": missing label column '" + label_column + "'");

    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        std::size_t col = 0;
        int label = 0;
        while (std::getline(ss, cell, ',')) {
            double value;
            try {
                std::size_t used = 0;
                value = std::stod(cell, &used);
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": non-numeric cell '" + cell + "'");
            }
            if (static_cast<std::ptrdiff_t>(col) == label_idx) {
                label = static_cast<int>(value);
                if (static_cast<double>(label) != value)
                    throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                             ": non-integer label");
            } else {
                row.push_back(value);
            }
            ++col;
        }
        if (col != header.size())
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected " +
                                     std::to_string(header.size()) + " cells, got " +
                                     std::to_string(col));
        rows.push_back(std::move(row));
        labels.push_back(label);
    }
    if (rows.empty()) throw std::runtime_error(path + ": no data rows");

    Dataset ds;
    ds.features = Tensor2(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) ds.features.at(r, c) = rows[r][c];
    ds.labels = std::move(labels);
    int max_label = 0;
    for (int l : ds.labels) {
        if (l < 0) throw std::runtime_error(path + ": negative label");
        max_label = std::max(max_label, l);
    }
    ds.class_count = max_label + 1;
    ds.provenance = path;
    return ds;
}

Normalizer Normalizer::fit(const Dataset& data, const std::vector<std::size_t>& train_ids) {
    if (train_ids.empty()) throw std::invalid_argument("Normalizer::fit: empty training split");
    const std::size_t d = data.features.cols;
    Normalizer n;
    n.mean.assign(d, 0.0);
    n.stddev.assign(d, 0.0);
    for (std::size_t id : train_ids)
        for (std::size_t c = 0; c < d; ++c) n.mean[c] += data.features.at(id, c);
    for (std::size_t c = 0; c < d; ++c) n.mean[c] /= static_cast<double>(train_ids.size());
    for (std::size_t id : train_ids)
        for (std::size_t c = 0; c < d; ++c) {
            double diff = data.features.at(id, c) - n.mean[c];
            n.stddev[c] += diff * diff;
        }
    for (std::size_t c = 0; c < d; ++c) {
        n.stddev[c] = std::sqrt(n.stddev[c] / static_cast<double>(train_ids.size()));
        if (n.stddev[c] < 1e-12) n.stddev[c] = 1.0;
    }
    return n;
}

void Normalizer::apply(Dataset& data) const {
    if (mean.size() != data.features.cols) throw ShapeError("Normalizer: dim mismatch");
    for (std::size_t r = 0; r < data.features.rows; ++r)
        for (std::size_t c = 0; c < data.features.cols; ++c)
            data.features.at(r, c) = (data.features.at(r, c) - mean[c]) / stddev[c];
}

EvalSet gather(const Dataset& data, const std::vector<std::size_t>& ids) {
    EvalSet es;
    es.x = Tensor2(ids.size(), data.features.cols);
    es.labels.resize(ids.size());
    for (std::size_t r = 0; r < ids.size(); ++r) {
        for (std::size_t c = 0; c < data.features.cols; ++c)
            es.x.at(r, c) = data.features.at(ids[r], c);
        es.labels[r] = data.labels[ids[r]];
    }
    return es;
}

}  // namespace mabret
