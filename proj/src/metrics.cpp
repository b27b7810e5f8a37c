/*
 *  metrics.cpp
 *  Exact KL cost and leave-one-out 1-nearest-neighbor label error.
 */
#include "bhsne/metrics.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bhsne/parallel.hpp"
#include "bhsne/vptree.hpp"

namespace bhsne {

namespace {

constexpr std::size_t kBruteForceLimit = 20000;

double row_dist_sq(const Matrix& y, std::size_t i, std::size_t j) {
    const double* a = y.row(i);
    const double* b = y.row(j);
    double s = 0.0;
    for (std::size_t d = 0; d < y.cols(); ++d) {
        const double diff = a[d] - b[d];
        s += diff * diff;
    }
    return s;
}

// Exact Student-t normalization over all ordered pairs.
double exact_z(const Matrix& y, int threads) {
    const std::size_t n = y.rows();
    std::vector<double> partial(chunk_count(n), 0.0);
    parallel_chunks(n, threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        double z = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                z += 1.0 / (1.0 + row_dist_sq(y, i, j));
            }
        }
        partial[c] = z;
    });
    double z = 0.0;
    for (const double v : partial) z += v;
    return z;
}

void append_double(std::string& out, double v) {
    char buf[32];
    const auto result = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, result.ptr);
}

}  // namespace

double kl_cost(const SparseAffinity& p, const Matrix& y, double p_scale, int threads) {
    if (p.n != y.rows()) throw std::invalid_argument("kl_cost: size mismatch");
    const double log_z = std::log(exact_z(y, threads));
    double cost = 0.0;
    for (std::size_t i = 0; i < p.n; ++i) {
        for (std::size_t e = p.row_ptr[i]; e < p.row_ptr[i + 1]; ++e) {
            const double pv = p.vals[e] * p_scale;
            if (pv <= 0.0) continue;
            const double dist_sq = row_dist_sq(y, i, p.cols[e]);
            cost += pv * (std::log(pv * (1.0 + dist_sq)) + log_z);
        }
    }
    return cost;
}

double kl_cost(const Matrix& dense_p, const Matrix& y, double p_scale, int threads) {
    const std::size_t n = y.rows();
    if (dense_p.rows() != n || dense_p.cols() != n) {
        throw std::invalid_argument("kl_cost: size mismatch");
    }
    const double log_z = std::log(exact_z(y, threads));
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double pv = dense_p(i, j) * p_scale;
            if (pv <= 0.0) continue;
            cost += pv * (std::log(pv * (1.0 + row_dist_sq(y, i, j))) + log_z);
        }
    }
    return cost;
}

double knn_error(const Matrix& y, const LabelVector& labels, int threads) {
    const std::size_t n = y.rows();
    if (labels.size() != n) throw std::invalid_argument("knn_error: label count mismatch");
    if (n < 2) throw std::invalid_argument("knn_error: need at least two points");

    std::vector<std::uint32_t> nearest(n);
    if (n <= kBruteForceLimit) {
        parallel_chunks(n, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                double best = std::numeric_limits<double>::infinity();
                std::uint32_t best_j = 0;
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == i) continue;
                    const double d = row_dist_sq(y, i, j);
                    if (d < best) {
                        best = d;
                        best_j = static_cast<std::uint32_t>(j);
                    }
                }
                nearest[i] = best_j;
            }
        });
    } else {
        const VpTree<EuclideanRows> tree(n, EuclideanRows{&y});
        parallel_chunks(n, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                nearest[i] = tree.knn(static_cast<std::uint32_t>(i), 1).front().index;
            }
        });
    }

    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[nearest[i]] != labels[i]) ++mismatches;
    }
    return static_cast<double>(mismatches) / static_cast<double>(n);
}

std::string EvalReport::csv_header() {
    return "algorithm,n,param,seconds,knn_error,final_kl,seed";
}

std::string EvalReport::csv_row() const {
    std::string row = algorithm;
    row += ',';
    row += std::to_string(n);
    row += ',';
    append_double(row, param);
    row += ',';
    append_double(row, seconds);
    row += ',';
    if (knn_err >= 0.0) append_double(row, knn_err);
    row += ',';
    append_double(row, final_kl);
    row += ',';
    row += std::to_string(seed);
    return row;
}

}  // namespace bhsne
