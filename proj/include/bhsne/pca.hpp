/*
 *  pca.hpp
 *  PCA dimensionality reduction applied ahead of the affinity computation.
 */
#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "matrix.hpp"

namespace bhsne {

enum class PcaMethod {
    Auto,        // Jacobi up to 4096 columns, randomized above
    Jacobi,      // cyclic Jacobi on the covariance
    Randomized,  // randomized range finder, oversampling 10, 2 power iterations
};

struct PcaModel {
    std::vector<double> mean;               // length d
    Matrix basis;                           // d x k, orthonormal columns
    std::vector<double> explained_variance; // length k, non-increasing
};

struct PcaResult {
    Matrix reduced;
    PcaModel model;
};

// Projects mean-centered data onto the top target_dims eigenvectors of its
// covariance. Inputs with d <= target_dims pass through unchanged with an
// identity model. Each component is flipped so its largest-magnitude entry
// is positive. All-identical data yields a zero projection with a warning.
PcaResult pca_reduce(const Matrix& data, std::size_t target_dims, int threads = 0,
                     PcaMethod method = PcaMethod::Auto);

}  // namespace bhsne
