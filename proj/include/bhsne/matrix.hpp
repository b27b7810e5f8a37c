/*
 *  matrix.hpp
 *  Row-major dense matrix of doubles, shared by data sets, embeddings and
 *  dense affinity matrices.
 */
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bhsne {

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }

    double* row(std::size_t i) { return values_.data() + i * cols_; }
    const double* row(std::size_t i) const { return values_.data() + i * cols_; }
    std::span<const double> row_span(std::size_t i) const { return {row(i), cols_}; }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

using DataMatrix = Matrix;
using Embedding = Matrix;
using LabelVector = std::vector<int>;

}  // namespace bhsne
