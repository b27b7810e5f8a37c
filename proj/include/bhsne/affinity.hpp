/*
 *  affinity.hpp
 *  Input similarities P: the dense form over all pairs and the sparse
 *  floor(3u)-neighbor form, including per-object bandwidth calibration.
 */
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "matrix.hpp"
#include "vptree.hpp"

namespace bhsne {

// Symmetric sparse joint distribution in CSR layout. Column indices are
// sorted within each row; p_ii is never stored; the grand total is 1.
struct SparseAffinity {
    std::size_t n = 0;
    std::vector<std::size_t> row_ptr;  // n + 1 offsets
    std::vector<std::uint32_t> cols;
    std::vector<double> vals;

    std::size_t nnz() const { return cols.size(); }
    double total() const;
    // 0 when the entry is absent.
    double value_at(std::uint32_t i, std::uint32_t j) const;
};

struct SigmaResult {
    double beta = 0.0;  // 1 / (2 sigma^2)
    std::vector<double> probs;
};

// Calibrates the Gaussian bandwidth for one object so that the perplexity of
// the conditional distribution over `distances` equals u: binary search on
// beta, tolerance 1e-5 on log2-perplexity, at most 200 iterations. Returns
// a uniform distribution when u exceeds the neighbor count (with a warning)
// or when all distances are equal.
SigmaResult find_sigma(std::span<const double> distances, double u);

// Dense joint P over all pairs: conditionals row-normalized over the N-1
// other objects, then p_ij = (p_{j|i} + p_{i|j}) / 2N.
Matrix dense_p(const Matrix& data, double u, int threads = 0);

// Sparse joint P from a k-nearest-neighbor graph: conditionals normalized
// over each neighborhood only, symmetrized over the union of supports.
SparseAffinity sparse_p(const std::vector<NeighborList>& graph, double u, int threads = 0);

// Scales all values by alpha (resp. 1/alpha); the sparsity pattern is unchanged.
void exaggerate(SparseAffinity& p, double alpha);
void unexaggerate(SparseAffinity& p, double alpha);

}  // namespace bhsne
