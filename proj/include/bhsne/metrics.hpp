/*
 *  metrics.hpp
 *  Exact evaluation quantities: KL cost and leave-one-out 1-nearest-neighbor
 *  label error.
 */
#pragma once

#include <cstdint>
#include <string>

#include "affinity.hpp"
#include "matrix.hpp"

namespace bhsne {

// sum_{i != j, p_ij > 0} p_ij log(p_ij / q_ij), with the Student-t Q
// normalized exactly over all pairs. Stored P values are multiplied by
// p_scale before use (1/alpha while the early exaggeration is active).
double kl_cost(const SparseAffinity& p, const Matrix& y, double p_scale = 1.0, int threads = 0);
double kl_cost(const Matrix& dense_p, const Matrix& y, double p_scale = 1.0, int threads = 0);

// Leave-one-out: the fraction of points whose nearest other embedding point
// carries a different label. Ties break toward the lower index. Brute force
// up to 20000 points, vantage-point tree above.
double knn_error(const Matrix& y, const LabelVector& labels, int threads = 0);

struct EvalReport {
    std::string algorithm;
    std::size_t n = 0;
    double param = 0.0;  // theta, rho, or 0 for the exact path
    double seconds = 0.0;
    double knn_err = -1.0;  // negative when labels were not supplied
    double final_kl = 0.0;
    std::uint64_t seed = 0;

    static std::string csv_header();
    std::string csv_row() const;
};

}  // namespace bhsne
