/*
 *  spacetree.hpp
 *  Quadtree (2-D) / octree (3-D) over an embedding. Every cell caches the
 *  center-of-mass and count of the points it contains.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

#include "config.hpp"
#include "matrix.hpp"

namespace bhsne {

class SpaceTree {
public:
    static constexpr int kMaxDepth = 64;
    static constexpr double kMinDiagonal = 1e-12;

    struct Node {
        std::array<double, 3> center{};
        std::array<double, 3> half_extent{};
        std::array<double, 3> com{};  // center of mass, finalized after the build
        double diagonal = 0.0;        // 2 * |half_extent|
        std::uint32_t count = 0;
        std::int32_t first_child = -1;  // children occupy [first_child, first_child + 2^dims)
        std::vector<std::uint32_t> points;  // leaf payload

        bool is_leaf() const { return first_child < 0; }
    };

    // Builds by inserting points one at a time, splitting a leaf whenever a
    // second point arrives. The root is the tight bounding box expanded by a
    // 1e-5 relative margin. Leaves hold one point, except cells below
    // kMinDiagonal or at kMaxDepth, which absorb coincident points.
    explicit SpaceTree(const Matrix& embedding);

    int dims() const { return dims_; }
    int fanout() const { return 1 << dims_; }
    std::size_t point_count() const { return n_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const Node& root() const { return nodes_.front(); }

private:
    void insert(std::uint32_t point_index, const double* y);
    void split(std::int32_t node_index);
    int quadrant_of(const Node& node, const double* y) const;

    int dims_ = 2;
    std::size_t n_ = 0;
    std::vector<Node> nodes_;
    const Matrix* build_src_ = nullptr;  // only valid during construction
};

// True when (y_cell, N_cell) may stand in for the individual interactions of
// all points in `cell` as seen from `point`: the size-versus-distance
// condition holds, and the cell is internal or a leaf not containing the
// target. self_index identifies the target point (-1 when unknown). A cell
// whose center of mass coincides with the target is never summarized.
inline bool check_summary(const SpaceTree::Node& cell, const double* point, int dims,
                          double theta,
                          SummaryCondition condition = SummaryCondition::Standard,
                          std::int32_t self_index = -1) {
    if (cell.is_leaf() && self_index >= 0) {
        const auto self = static_cast<std::uint32_t>(self_index);
        if (std::find(cell.points.begin(), cell.points.end(), self) != cell.points.end()) {
            return false;
        }
    }
    double dist_sq = 0.0;
    for (int d = 0; d < dims; ++d) {
        const double diff = point[d] - cell.com[d];
        dist_sq += diff * diff;
    }
    if (dist_sq == 0.0) return false;
    if (condition == SummaryCondition::Standard) {
        return cell.diagonal * cell.diagonal < theta * theta * dist_sq;
    }
    return dist_sq < theta * cell.diagonal;
}

}  // namespace bhsne
