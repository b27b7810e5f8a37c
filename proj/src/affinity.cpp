/*
 *  affinity.cpp
 *  Gaussian input similarities with per-object perplexity calibration.
 */
#include "bhsne/affinity.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "bhsne/parallel.hpp"

namespace bhsne {

namespace {

constexpr double kLogPerplexityTol = 1e-5;  // in log2 space
constexpr int kMaxBisectIters = 200;
constexpr double kBracketRelWidth = 1e-8;
constexpr double kLn2 = 0.6931471805599453;

// Entropy (bits) of the conditional distribution at the given beta, over
// squared distances shifted by their minimum to keep the exponentials from
// underflowing. Fills weights with the unnormalized kernel values and
// returns their sum through `sum_out`.
double entropy_bits(double beta, std::span<const double> shifted_sq,
                    std::vector<double>& weights, double& sum_out) {
    double sum = 0.0;
    double weighted = 0.0;
    for (std::size_t j = 0; j < shifted_sq.size(); ++j) {
        const double w = std::exp(-beta * shifted_sq[j]);
        weights[j] = w;
        sum += w;
        weighted += shifted_sq[j] * w;
    }
    sum_out = sum;
    return (beta * weighted / sum + std::log(sum)) / kLn2;
}

}  // namespace

double SparseAffinity::total() const {
    return std::accumulate(vals.begin(), vals.end(), 0.0);
}

double SparseAffinity::value_at(std::uint32_t i, std::uint32_t j) const {
    const auto begin = cols.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
    const auto end = cols.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
    const auto it = std::lower_bound(begin, end, j);
    if (it == end || *it != j) return 0.0;
    return vals[static_cast<std::size_t>(it - cols.begin())];
}

SigmaResult find_sigma(std::span<const double> distances, double u) {
    const std::size_t m = distances.size();
    if (m == 0) throw std::invalid_argument("find_sigma: empty distance list");

    SigmaResult out;
    out.probs.assign(m, 1.0 / static_cast<double>(m));

    if (u > static_cast<double>(m)) {
        std::cerr << "find_sigma: perplexity " << u << " unreachable with " << m
                  << " neighbors, clamping to uniform\n";
        out.beta = 0.0;
        return out;
    }

    std::vector<double> sq(m);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        sq[j] = distances[j] * distances[j];
        lo = std::min(lo, sq[j]);
        hi = std::max(hi, sq[j]);
    }
    if (hi == lo) {
        // All neighbors equidistant: the distribution is uniform for any beta.
        out.beta = 1.0;
        return out;
    }
    for (auto& s : sq) s -= lo;

    const double target = std::log2(u);
    double beta = 1.0;
    double beta_min = -std::numeric_limits<double>::max();
    double beta_max = std::numeric_limits<double>::max();
    std::vector<double> weights(m);
    double sum = 0.0;

    for (int iter = 0; iter < kMaxBisectIters; ++iter) {
        const double diff = entropy_bits(beta, sq, weights, sum) - target;
        // Stop only once the bracket is tight as well; the first tolerance
        // crossing leaves beta about 1e-5 away from the true root, which is
        // too coarse for downstream consumers of beta itself.
        const bool bracketed = beta_min > -std::numeric_limits<double>::max() &&
                               beta_max < std::numeric_limits<double>::max();
        if (std::fabs(diff) <= kLogPerplexityTol && bracketed &&
            (beta_max - beta_min) <= kBracketRelWidth * beta) {
            break;
        }
        if (diff > 0.0) {  // perplexity too high: sharpen the kernel
            beta_min = beta;
            beta = beta_max == std::numeric_limits<double>::max() ? beta * 2.0
                                                                  : (beta + beta_max) / 2.0;
        } else {
            beta_max = beta;
            beta = beta_min == -std::numeric_limits<double>::max() ? beta / 2.0
                                                                   : (beta + beta_min) / 2.0;
        }
    }

    entropy_bits(beta, sq, weights, sum);
    for (std::size_t j = 0; j < m; ++j) out.probs[j] = weights[j] / sum;
    out.beta = beta;
    return out;
}

Matrix dense_p(const Matrix& data, double u, int threads) {
    const std::size_t n = data.rows();
    if (n < 2) throw std::invalid_argument("dense_p: need at least two objects");

    // Conditional rows first: P(i, j) = p_{j|i}.
    Matrix p(n, n, 0.0);
    parallel_chunks(n, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        std::vector<double> dist(n - 1);
        std::vector<std::uint32_t> idx(n - 1);
        for (std::size_t i = begin; i < end; ++i) {
            std::size_t c = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                double s = 0.0;
                for (std::size_t d = 0; d < data.cols(); ++d) {
                    const double diff = data(i, d) - data(j, d);
                    s += diff * diff;
                }
                dist[c] = std::sqrt(s);
                idx[c] = static_cast<std::uint32_t>(j);
                ++c;
            }
            const SigmaResult sig = find_sigma(dist, u);
            for (std::size_t e = 0; e < n - 1; ++e) p(i, idx[e]) = sig.probs[e];
        }
    });

    // Symmetrize: p_ij = (p_{j|i} + p_{i|j}) / 2N.
    const double scale = 1.0 / (2.0 * static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = (p(i, j) + p(j, i)) * scale;
            p(i, j) = v;
            p(j, i) = v;
        }
        p(i, i) = 0.0;
    }
    return p;
}

SparseAffinity sparse_p(const std::vector<NeighborList>& graph, double u, int threads) {
    const std::size_t n = graph.size();
    if (n < 2) throw std::invalid_argument("sparse_p: need at least two objects");

    // Calibrate each conditional distribution over its neighborhood.
    std::vector<std::size_t> offsets(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) offsets[i + 1] = offsets[i] + graph[i].size();
    std::vector<std::uint32_t> dir_cols(offsets[n]);
    std::vector<double> dir_vals(offsets[n]);

    parallel_chunks(n, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        std::vector<double> dist;
        for (std::size_t i = begin; i < end; ++i) {
            const NeighborList& nb = graph[i];
            dist.resize(nb.size());
            for (std::size_t e = 0; e < nb.size(); ++e) dist[e] = nb[e].distance;
            const SigmaResult sig = find_sigma(dist, u);
            // Sort the row by column index for the symmetrizing merge below.
            std::vector<std::pair<std::uint32_t, double>> row(nb.size());
            for (std::size_t e = 0; e < nb.size(); ++e) row[e] = {nb[e].index, sig.probs[e]};
            std::sort(row.begin(), row.end());
            for (std::size_t e = 0; e < nb.size(); ++e) {
                dir_cols[offsets[i] + e] = row[e].first;
                dir_vals[offsets[i] + e] = row[e].second;
            }
        }
    });

    // Transpose of the directed conditional matrix (rows stay sorted).
    std::vector<std::size_t> t_ptr(n + 1, 0);
    for (std::uint32_t c : dir_cols) ++t_ptr[c + 1];
    for (std::size_t i = 0; i < n; ++i) t_ptr[i + 1] += t_ptr[i];
    std::vector<std::uint32_t> t_cols(dir_cols.size());
    std::vector<double> t_vals(dir_vals.size());
    {
        std::vector<std::size_t> cursor(t_ptr.begin(), t_ptr.end() - 1);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e) {
                const std::uint32_t j = dir_cols[e];
                t_cols[cursor[j]] = static_cast<std::uint32_t>(i);
                t_vals[cursor[j]] = dir_vals[e];
                ++cursor[j];
            }
        }
    }

    // Merge row i of the directed matrix with row i of its transpose:
    // p_ij = (p_{j|i} + p_{i|j}) / 2N over the union of the two supports.
    SparseAffinity out;
    out.n = n;
    out.row_ptr.assign(n + 1, 0);
    out.cols.reserve(dir_cols.size() * 2);
    out.vals.reserve(dir_vals.size() * 2);
    const double scale = 1.0 / (2.0 * static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t a = offsets[i];
        std::size_t b = t_ptr[i];
        const std::size_t a_end = offsets[i + 1];
        const std::size_t b_end = t_ptr[i + 1];
        while (a < a_end || b < b_end) {
            std::uint32_t col;
            double v = 0.0;
            if (a < a_end && (b >= b_end || dir_cols[a] <= t_cols[b])) {
                col = dir_cols[a];
                v += dir_vals[a];
                ++a;
            } else {
                col = t_cols[b];
            }
            if (b < b_end && t_cols[b] == col) {
                v += t_vals[b];
                ++b;
            }
            out.cols.push_back(col);
            out.vals.push_back(v * scale);
        }
        out.row_ptr[i + 1] = out.cols.size();
    }
    return out;
}

void exaggerate(SparseAffinity& p, double alpha) {
    for (auto& v : p.vals) v *= alpha;
}

void unexaggerate(SparseAffinity& p, double alpha) {
    for (auto& v : p.vals) v /= alpha;
}

}  // namespace bhsne
