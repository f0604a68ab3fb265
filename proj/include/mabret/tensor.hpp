#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mabret {

/// Thrown when tensor or network shapes do not line up.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a computation produces non-finite values.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dense row-major matrix of doubles. The whole engine runs in 64-bit floats;
/// loss-decrease rewards and finite-difference checks are too noisy in 32-bit.
struct Tensor2 {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Tensor2() = default;
    Tensor2(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }

    bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }
};

inline void require_shape(const Tensor2& t, std::size_t r, std::size_t c, const char* what) {
    if (t.rows != r || t.cols != c)
        throw ShapeError(std::string(what) + ": expected " + std::to_string(r) + "x" +
                         std::to_string(c) + ", got " + std::to_string(t.rows) + "x" +
                         std::to_string(t.cols));
}

bool all_finite(const Tensor2& t);
bool all_finite(const std::vector<double>& v);

}  // namespace mabret
