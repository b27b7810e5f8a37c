/*
 *  vptree.hpp
 *  Vantage-point tree for exact k-nearest-neighbor search in a metric space.
 *
 *  Each node stores a data object and the radius of a ball centered on it.
 *  Objects strictly inside the ball live in the inside subtree, objects at
 *  distance >= radius in the outside subtree. Built bulk-recursively: the
 *  vantage point is drawn uniformly at random (seeded), the radius is the
 *  median distance from it to the remaining objects.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

#include "matrix.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace bhsne {

struct Neighbor {
    std::uint32_t index;
    double distance;
};

// Ascending by (distance, index); ties resolved toward the lower index.
using NeighborList = std::vector<Neighbor>;

struct EuclideanRows {
    const Matrix* data;

    double operator()(std::uint32_t a, std::uint32_t b) const {
        const double* x = data->row(a);
        const double* y = data->row(b);
        double s = 0.0;
        for (std::size_t j = 0; j < data->cols(); ++j) {
            const double diff = x[j] - y[j];
            s += diff * diff;
        }
        return std::sqrt(s);
    }
};

template <class Metric>
class VpTree {
public:
    struct Node {
        std::uint32_t item = 0;
        double radius = 0.0;
        std::int32_t inside = -1;
        std::int32_t outside = -1;
    };

    VpTree(std::size_t n, Metric metric, std::uint64_t seed = 0x9e3779b97f4a7c15ULL)
        : n_(n), metric_(std::move(metric)) {
        if (n == 0) throw std::invalid_argument("VpTree: empty input");
        std::vector<std::pair<double, std::uint32_t>> items(n);
        for (std::size_t i = 0; i < n; ++i) items[i] = {0.0, static_cast<std::uint32_t>(i)};
        nodes_.reserve(n);
        Rng rng(seed);
        build_range(items, 0, n, rng);
    }

    // The k nearest objects to the stored object `query`, the query itself
    // excluded. k > n-1 is clamped with a warning.
    NeighborList knn(std::uint32_t query, std::size_t k) const {
        if (k == 0) throw std::invalid_argument("VpTree::knn: k must be positive");
        if (k > n_ - 1) {
            std::cerr << "VpTree::knn: k=" << k << " exceeds n-1=" << n_ - 1
                      << ", clamping\n";
            k = n_ - 1;
        }
        Heap heap;
        search(0, query, k, heap);
        NeighborList out(heap.size());
        for (std::size_t i = heap.size(); i-- > 0;) {
            out[i] = {heap.top().index, heap.top().distance};
            heap.pop();
        }
        return out;
    }

    const std::vector<Node>& nodes() const { return nodes_; }
    std::int32_t root() const { return 0; }
    std::size_t size() const { return n_; }

private:
    struct Candidate {
        double distance;
        std::uint32_t index;
        // Max-heap ordering: the worst candidate (largest distance, ties to
        // the larger index) sits on top.
        bool operator<(const Candidate& o) const {
            if (distance != o.distance) return distance < o.distance;
            return index < o.index;
        }
    };
    using Heap = std::priority_queue<Candidate>;

    std::int32_t build_range(std::vector<std::pair<double, std::uint32_t>>& items,
                             std::size_t lo, std::size_t hi, Rng& rng) {
        if (lo == hi) return -1;
        const auto node_index = static_cast<std::int32_t>(nodes_.size());
        nodes_.emplace_back();

        std::swap(items[lo], items[lo + rng.below(hi - lo)]);
        const std::uint32_t vantage = items[lo].second;
        nodes_[node_index].item = vantage;
        if (hi - lo == 1) return node_index;

        for (std::size_t i = lo + 1; i < hi; ++i) items[i].first = metric_(vantage, items[i].second);

        // Median distance becomes the ball radius; objects at exactly the
        // radius go outside, keeping the inside-subtree invariant strict.
        const std::size_t median = lo + 1 + (hi - lo - 1) / 2;
        std::nth_element(items.begin() + lo + 1, items.begin() + median, items.begin() + hi);
        const double radius = items[median].first;
        auto mid = std::partition(items.begin() + lo + 1, items.begin() + hi,
                                  [radius](const auto& a) { return a.first < radius; });
        const auto split = static_cast<std::size_t>(mid - items.begin());

        nodes_[node_index].radius = radius;
        const std::int32_t inside = build_range(items, lo + 1, split, rng);
        const std::int32_t outside = build_range(items, split, hi, rng);
        nodes_[node_index].inside = inside;
        nodes_[node_index].outside = outside;
        return node_index;
    }

    void search(std::int32_t index, std::uint32_t query, std::size_t k, Heap& heap) const {
        const Node& node = nodes_[index];
        const double d = metric_(query, node.item);
        if (node.item != query) {
            if (heap.size() < k) {
                heap.push({d, node.item});
            } else if (Candidate{d, node.item} < heap.top()) {
                heap.pop();
                heap.push({d, node.item});
            }
        }

        // Examine the inside child first when the query lies inside the ball.
        const bool inside_first = d < node.radius;
        for (int pass = 0; pass < 2; ++pass) {
            const bool go_inside = (pass == 0) == inside_first;
            const std::int32_t child = go_inside ? node.inside : node.outside;
            if (child < 0) continue;
            const double tau =
                heap.size() < k ? std::numeric_limits<double>::infinity() : heap.top().distance;
            // Non-strict bounds: a subtree that can still hold a candidate at
            // distance exactly tau must be visited so the lower-index tie wins.
            const bool admissible = go_inside ? (d - node.radius <= tau) : (node.radius - d <= tau);
            if (admissible) search(child, query, k, heap);
        }
    }

    std::size_t n_;
    Metric metric_;
    std::vector<Node> nodes_;
};

// k-nearest-neighbor lists for all n objects. Queries run in parallel; the
// tree is immutable after construction, so results are independent of the
// thread count.
template <class Metric>
std::vector<NeighborList> knn_graph(std::size_t n, Metric metric, std::size_t k,
                                    int threads = 0) {
    if (n < 2) throw std::invalid_argument("knn_graph: need at least two objects");
    if (k > n - 1) {
        std::cerr << "knn_graph: k=" << k << " exceeds n-1=" << n - 1 << ", clamping\n";
        k = n - 1;
    }
    VpTree<Metric> tree(n, metric);
    std::vector<NeighborList> graph(n);
    parallel_chunks(n, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            graph[i] = tree.knn(static_cast<std::uint32_t>(i), k);
        }
    });
    return graph;
}

inline std::vector<NeighborList> knn_graph(const Matrix& data, std::size_t k, int threads = 0) {
    return knn_graph(data.rows(), EuclideanRows{&data}, k, threads);
}

}  // namespace bhsne
