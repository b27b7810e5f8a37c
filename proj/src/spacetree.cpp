/*
 *  spacetree.cpp
 *  Quadtree/octree construction over an embedding.
 */
#include "bhsne/spacetree.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "bhsne/error.hpp"

namespace bhsne {

SpaceTree::SpaceTree(const Matrix& embedding)
    : dims_(static_cast<int>(embedding.cols())), n_(embedding.rows()), build_src_(&embedding) {
    if (dims_ != 2 && dims_ != 3) {
        throw std::invalid_argument("SpaceTree: embedding must be 2- or 3-dimensional");
    }
    if (n_ == 0) throw std::invalid_argument("SpaceTree: empty embedding");

    std::array<double, 3> lo{}, hi{};
    for (int d = 0; d < dims_; ++d) {
        lo[d] = hi[d] = embedding(0, d);
    }
    for (std::size_t i = 0; i < n_; ++i) {
        for (int d = 0; d < dims_; ++d) {
            const double v = embedding(i, d);
            if (!std::isfinite(v)) {
                throw NumericError("SpaceTree: non-finite coordinate at point " +
                                   std::to_string(i));
            }
            lo[d] = std::min(lo[d], v);
            hi[d] = std::max(hi[d], v);
        }
    }

    Node root;
    double diag_sq = 0.0;
    for (int d = 0; d < dims_; ++d) {
        root.center[d] = (lo[d] + hi[d]) * 0.5;
        root.half_extent[d] = (hi[d] - lo[d]) * 0.5 * (1.0 + 1e-5);
        diag_sq += root.half_extent[d] * root.half_extent[d];
    }
    root.diagonal = 2.0 * std::sqrt(diag_sq);

    nodes_.reserve(3 * n_ + 8);
    nodes_.push_back(std::move(root));
    for (std::size_t i = 0; i < n_; ++i) {
        insert(static_cast<std::uint32_t>(i), embedding.row(i));
    }

    for (Node& node : nodes_) {
        if (node.count == 0) continue;
        const double inv = 1.0 / static_cast<double>(node.count);
        for (int d = 0; d < dims_; ++d) node.com[d] *= inv;
    }
    build_src_ = nullptr;
}

int SpaceTree::quadrant_of(const Node& node, const double* y) const {
    // Points exactly on a splitting plane go to the lower-index child.
    int q = 0;
    for (int d = 0; d < dims_; ++d) {
        if (y[d] > node.center[d]) q |= 1 << d;
    }
    return q;
}

void SpaceTree::insert(std::uint32_t point_index, const double* y) {
    std::int32_t cur = 0;
    int depth = 0;
    while (true) {
        {
            Node& node = nodes_[cur];
            node.count += 1;
            for (int d = 0; d < dims_; ++d) node.com[d] += y[d];
            if (node.is_leaf()) {
                if (node.points.empty()) {
                    node.points.push_back(point_index);
                    return;
                }
                if (node.diagonal < kMinDiagonal || depth >= kMaxDepth) {
                    // Coincident points accumulate in one leaf.
                    node.points.push_back(point_index);
                    return;
                }
                split(cur);  // invalidates `node`
            }
        }
        const Node& parent = nodes_[cur];
        cur = parent.first_child + quadrant_of(parent, y);
        ++depth;
    }
}

void SpaceTree::split(std::int32_t node_index) {
    const int fan = fanout();
    const auto first = static_cast<std::int32_t>(nodes_.size());
    for (int q = 0; q < fan; ++q) {
        Node child;
        double diag_sq = 0.0;
        for (int d = 0; d < dims_; ++d) {
            const double h = nodes_[node_index].half_extent[d] * 0.5;
            child.half_extent[d] = h;
            child.center[d] = nodes_[node_index].center[d] + (((q >> d) & 1) ? h : -h);
            diag_sq += h * h;
        }
        child.diagonal = nodes_[node_index].diagonal * 0.5;
        nodes_.push_back(std::move(child));
    }

    Node& node = nodes_[node_index];
    node.first_child = first;
    // Only single-point leaves ever split; coincident-guard leaves never do.
    assert(node.points.size() == 1);
    for (const std::uint32_t p : node.points) {
        const double* y = build_src_->row(p);
        Node& child = nodes_[first + quadrant_of(node, y)];
        child.count += 1;
        for (int d = 0; d < dims_; ++d) child.com[d] += y[d];
        child.points.push_back(p);
    }
    node.points.clear();
    node.points.shrink_to_fit();
}

}  // namespace bhsne
