#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "aar/errors.hpp"

namespace aar {

// Dense row-major matrix of doubles. Deliberately minimal: the backbones in
// this project are small MLPs and the heavy loops live in nn.cpp.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool empty() const { return rows == 0 || cols == 0; }

    // Copy of the listed rows, in the given order.
    Matrix gather(std::span<const std::size_t> indices) const {
        Matrix out(indices.size(), cols);
        for (std::size_t i = 0; i < indices.size(); ++i) {
            if (indices[i] >= rows) throw InvalidInput("gather: row index out of range");
            auto src = row(indices[i]);
            std::copy(src.begin(), src.end(), out.row(i).begin());
        }
        return out;
    }
};

} // namespace aar
