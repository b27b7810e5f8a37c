/*
 *  gradient.hpp
 *  The t-SNE gradient three ways: exact O(N^2), Barnes-Hut point-cell
 *  approximation, and the dual-tree cell-cell variant.
 */
#pragma once

#include "affinity.hpp"
#include "config.hpp"
#include "matrix.hpp"
#include "spacetree.hpp"

namespace bhsne {

struct GradientField {
    Matrix grad;    // dC/dy_i per point, n x s
    double z = 0.0; // Student-t normalization over ordered pairs
};

struct RepulsiveField {
    Matrix f_rep_z;  // repulsive forces times Z
    double z = 0.0;
};

struct ForceSplit {
    Matrix f_attr;
    Matrix f_rep;
};

// Reference implementation: grad_i = 4 sum_j (p_ij - q_ij) q_ij Z (y_i - y_j).
GradientField exact_gradient(const SparseAffinity& p, const Matrix& y, int threads = 0);
GradientField exact_gradient(const Matrix& dense_p, const Matrix& y, int threads = 0);

// Attractive part over the stored nonzeros of P: sum_j p_ij q_ij Z (y_i - y_j).
Matrix attractive_forces(const SparseAffinity& p, const Matrix& y, int threads = 0);

// Repulsive part approximated against the tree: per point, cells passing the
// summary condition contribute N_cell q_{i,cell}^2 Z^2 (y_i - y_cell) and
// N_cell q_{i,cell} Z to the Z estimate; other cells are opened. The caller
// divides by z.
RepulsiveField bh_repulsive(const Matrix& y, const SpaceTree& tree, double theta,
                            SummaryCondition condition = SummaryCondition::Standard,
                            int threads = 0);

// Cell-cell variant: a simultaneous double traversal; a passing pair applies
// the interaction of the two centers-of-mass to every point of both cells.
// Self-pairs always recurse.
RepulsiveField dual_tree_repulsive(const Matrix& y, const SpaceTree& tree, double rho,
                                   SummaryCondition condition = SummaryCondition::Standard);

ForceSplit split_forces(const Matrix& f_attr, const RepulsiveField& repulsive);

// grad = 4 (f_attr - f_rep_z / z)
GradientField combine_forces(const Matrix& f_attr, const RepulsiveField& repulsive);

// Dispatches to the exact, Barnes-Hut or dual-tree path per cfg.algorithm
// (building the space tree when needed).
GradientField compute_gradient(const SparseAffinity& p, const Matrix& y, const RunConfig& cfg);

// KL cost with the tree-estimated normalization: attractive terms from the
// sparse support, Z from the point-cell traversal at the given parameter.
// Stored values are multiplied by p_scale before use.
double approx_kl_cost(const SparseAffinity& p, const Matrix& y, const SpaceTree& tree,
                      double param, SummaryCondition condition = SummaryCondition::Standard,
                      double p_scale = 1.0, int threads = 0);

}  // namespace bhsne
