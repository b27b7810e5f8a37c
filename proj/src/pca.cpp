/*
 *  pca.cpp
 *  PCA via eigendecomposition of the covariance: cyclic Jacobi up to 4096
 *  columns, a matrix-free randomized range finder above.
 */
#include "bhsne/pca.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "bhsne/parallel.hpp"
#include "bhsne/rng.hpp"

namespace bhsne {

namespace {

constexpr std::size_t kJacobiLimit = 4096;
constexpr std::size_t kOversampling = 10;
constexpr int kPowerIterations = 2;
constexpr std::uint64_t kRangeFinderSeed = 0x71ce5eedULL;

std::vector<double> column_means(const Matrix& data) {
    std::vector<double> mean(data.cols(), 0.0);
    for (std::size_t i = 0; i < data.rows(); ++i) {
        const double* row = data.row(i);
        for (std::size_t j = 0; j < data.cols(); ++j) mean[j] += row[j];
    }
    for (auto& m : mean) m /= static_cast<double>(data.rows());
    return mean;
}

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Eigenvectors are
// returned as columns of V; pairs are unsorted.
void jacobi_eigen(Matrix& a, Matrix& v) {
    const std::size_t d = a.rows();
    v = Matrix(d, d, 0.0);
    for (std::size_t i = 0; i < d; ++i) v(i, i) = 1.0;

    double norm = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) norm += a(i, j) * a(i, j);
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) return;
    const double stop = 1e-14 * norm;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) off += a(p, q) * a(p, q);
        }
        if (std::sqrt(2.0 * off) < stop) break;

        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                const double apq = a(p, q);
                if (std::fabs(apq) < 1e-300) continue;
                const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                for (std::size_t k = 0; k < d; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
}

// Centered product: out = (data - mean)^T (data - mean) / (n - 1).
Matrix covariance(const Matrix& data, const std::vector<double>& mean, int threads) {
    const std::size_t n = data.rows();
    const std::size_t d = data.cols();
    Matrix cov(d, d, 0.0);
    parallel_chunks(d, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        std::vector<double> centered(n);
        for (std::size_t a = begin; a < end; ++a) {
            for (std::size_t i = 0; i < n; ++i) centered[i] = data(i, a) - mean[a];
            for (std::size_t b = a; b < d; ++b) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) s += centered[i] * (data(i, b) - mean[b]);
                cov(a, b) = s / static_cast<double>(n - 1);
            }
        }
    });
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = 0; b < a; ++b) cov(a, b) = cov(b, a);
    }
    return cov;
}

// q = centered^T (centered q') / (n - 1), applied column-blockwise without
// forming the covariance. In and out are d x m.
Matrix apply_covariance(const Matrix& data, const std::vector<double>& mean, const Matrix& q,
                        int threads) {
    const std::size_t n = data.rows();
    const std::size_t d = data.cols();
    const std::size_t m = q.cols();
    Matrix xq(n, m, 0.0);  // (data - mean) * q
    parallel_chunks(n, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const double* row = data.row(i);
            double* out = xq.row(i);
            for (std::size_t j = 0; j < d; ++j) {
                const double x = row[j] - mean[j];
                if (x == 0.0) continue;
                const double* qr = q.row(j);
                for (std::size_t c = 0; c < m; ++c) out[c] += x * qr[c];
            }
        }
    });
    // The back-projection accumulates across rows of xq into shared output
    // rows, so it stays serial.
    Matrix result(d, m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = data.row(i);
        const double* xqr = xq.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double x = row[j] - mean[j];
            if (x == 0.0) continue;
            double* out = result.row(j);
            for (std::size_t c = 0; c < m; ++c) out[c] += x * xqr[c];
        }
    }
    const double inv = 1.0 / static_cast<double>(n - 1);
    for (auto& v : result.values()) v *= inv;
    return result;
}

// Modified Gram-Schmidt orthonormalization of the columns of q.
void orthonormalize(Matrix& q) {
    const std::size_t d = q.rows();
    const std::size_t m = q.cols();
    for (std::size_t c = 0; c < m; ++c) {
        for (std::size_t prev = 0; prev < c; ++prev) {
            double dot = 0.0;
            for (std::size_t i = 0; i < d; ++i) dot += q(i, c) * q(i, prev);
            for (std::size_t i = 0; i < d; ++i) q(i, c) -= dot * q(i, prev);
        }
        double norm = 0.0;
        for (std::size_t i = 0; i < d; ++i) norm += q(i, c) * q(i, c);
        norm = std::sqrt(norm);
        if (norm < 1e-300) {
            for (std::size_t i = 0; i < d; ++i) q(i, c) = 0.0;
            continue;
        }
        for (std::size_t i = 0; i < d; ++i) q(i, c) /= norm;
    }
}

struct EigenPairs {
    std::vector<double> values;  // descending
    Matrix vectors;              // d x k, columns aligned with values
};

EigenPairs top_eigenpairs(Matrix cov, std::size_t k) {
    const std::size_t d = cov.rows();
    Matrix v;
    jacobi_eigen(cov, v);
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return cov(a, a) > cov(b, b); });
    EigenPairs out;
    out.values.resize(k);
    out.vectors = Matrix(d, k);
    for (std::size_t c = 0; c < k; ++c) {
        out.values[c] = std::max(cov(order[c], order[c]), 0.0);
        for (std::size_t i = 0; i < d; ++i) out.vectors(i, c) = v(i, order[c]);
    }
    return out;
}

// Flip each component so its largest-magnitude entry is positive.
void fix_signs(Matrix& basis) {
    for (std::size_t c = 0; c < basis.cols(); ++c) {
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < basis.rows(); ++i) {
            const double mag = std::fabs(basis(i, c));
            if (mag > best) {
                best = mag;
                arg = i;
            }
        }
        if (basis(arg, c) < 0.0) {
            for (std::size_t i = 0; i < basis.rows(); ++i) basis(i, c) = -basis(i, c);
        }
    }
}

}  // namespace

PcaResult pca_reduce(const Matrix& data, std::size_t target_dims, int threads,
                     PcaMethod method) {
    if (target_dims < 1) throw std::invalid_argument("pca_reduce: target_dims must be >= 1");
    const std::size_t n = data.rows();
    const std::size_t d = data.cols();

    if (d <= target_dims) {
        // Pass-through: identity model, per-dimension variances as the spectrum.
        PcaResult out;
        out.reduced = data;
        out.model.mean.assign(d, 0.0);
        out.model.basis = Matrix(d, d, 0.0);
        for (std::size_t j = 0; j < d; ++j) out.model.basis(j, j) = 1.0;
        const std::vector<double> mean = column_means(data);
        out.model.explained_variance.assign(d, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                const double c = data(i, j) - mean[j];
                out.model.explained_variance[j] += c * c;
            }
        }
        for (auto& v : out.model.explained_variance) v /= static_cast<double>(n - 1);
        std::sort(out.model.explained_variance.begin(), out.model.explained_variance.end(),
                  std::greater<>());
        return out;
    }

    const std::vector<double> mean = column_means(data);
    const bool randomized = method == PcaMethod::Randomized ||
                            (method == PcaMethod::Auto && d > kJacobiLimit);

    EigenPairs pairs;
    if (!randomized) {
        pairs = top_eigenpairs(covariance(data, mean, threads), target_dims);
    } else {
        // Range finder over the covariance operator, applied matrix-free.
        const std::size_t m = std::min(d, target_dims + kOversampling);
        Matrix q(d, m);
        Rng rng(kRangeFinderSeed);
        for (auto& v : q.values()) v = rng.gaussian();
        q = apply_covariance(data, mean, q, threads);
        orthonormalize(q);
        for (int it = 0; it < kPowerIterations; ++it) {
            q = apply_covariance(data, mean, q, threads);
            orthonormalize(q);
        }
        // Project: b = q^T C q, then decompose the small matrix.
        const Matrix cq = apply_covariance(data, mean, q, threads);
        Matrix b(m, m, 0.0);
        for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t c = 0; c < m; ++c) {
                double s = 0.0;
                for (std::size_t i = 0; i < d; ++i) s += q(i, r) * cq(i, c);
                b(r, c) = s;
            }
        }
        // Symmetrize against round-off before the Jacobi pass.
        for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t c = r + 1; c < m; ++c) {
                const double v = 0.5 * (b(r, c) + b(c, r));
                b(r, c) = v;
                b(c, r) = v;
            }
        }
        const EigenPairs small = top_eigenpairs(std::move(b), target_dims);
        pairs.values = small.values;
        pairs.vectors = Matrix(d, target_dims, 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t c = 0; c < target_dims; ++c) {
                double s = 0.0;
                for (std::size_t r = 0; r < m; ++r) s += q(i, r) * small.vectors(r, c);
                pairs.vectors(i, c) = s;
            }
        }
    }

    if (pairs.values.front() <= 0.0) {
        std::cerr << "pca_reduce: input has zero variance, projection is degenerate\n";
    }
    fix_signs(pairs.vectors);

    PcaResult out;
    out.model.mean = mean;
    out.model.basis = std::move(pairs.vectors);
    out.model.explained_variance = std::move(pairs.values);

    out.reduced = Matrix(n, target_dims, 0.0);
    parallel_chunks(n, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const double* row = data.row(i);
            double* o = out.reduced.row(i);
            for (std::size_t j = 0; j < d; ++j) {
                const double x = row[j] - mean[j];
                if (x == 0.0) continue;
                for (std::size_t c = 0; c < target_dims; ++c) {
                    o[c] += x * out.model.basis(j, c);
                }
            }
        }
    });
    return out;
}

}  // namespace bhsne
