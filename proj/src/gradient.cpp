/*
 *  gradient.cpp
 *  Exact, Barnes-Hut and dual-tree t-SNE gradients.
 */
#include "bhsne/gradient.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "bhsne/error.hpp"
#include "bhsne/parallel.hpp"

namespace bhsne {

namespace {

// Hot loops are instantiated per embedding dimensionality so the inner
// distance computations unroll and vectorize.
template <int S>
double pair_dist_sq(const double* a, const double* b) {
    double s = 0.0;
    for (int d = 0; d < S; ++d) {
        const double diff = a[d] - b[d];
        s += diff * diff;
    }
    return s;
}

template <int S>
double z_pass(const Matrix& y, int threads) {
    const std::size_t n = y.rows();
    std::vector<double> partial(chunk_count(n), 0.0);
    parallel_chunks(n, threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        double z = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            const double* yi = y.row(i);
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                z += 1.0 / (1.0 + pair_dist_sq<S>(yi, y.row(j)));
            }
        }
        partial[c] = z;
    });
    double z = 0.0;
    for (const double p : partial) z += p;
    return z;
}

// Dense and sparse P share the exact kernel through a row accessor:
// RowP(i) returns a cursor yielding p_ij for consecutive j.
struct DenseRow {
    const double* row;
    double operator()(std::size_t j) {
        return row[j];
    }
};

struct SparseRow {
    const SparseAffinity* p;
    std::size_t ptr;
    std::size_t end;
    double operator()(std::size_t j) {
        // Rows are column-sorted and j advances monotonically.
        while (ptr < end && p->cols[ptr] < j) ++ptr;
        if (ptr < end && p->cols[ptr] == j) return p->vals[ptr];
        return 0.0;
    }
};

template <int S, class MakeRow>
GradientField exact_gradient_impl(MakeRow make_row, const Matrix& y, int threads) {
    const std::size_t n = y.rows();
    GradientField out;
    out.z = z_pass<S>(y, threads);
    out.grad = Matrix(n, S, 0.0);
    const double inv_z = 1.0 / out.z;

    parallel_chunks(n, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            auto row = make_row(i);
            const double* yi = y.row(i);
            double acc[S] = {};
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double* yj = y.row(j);
                const double w = 1.0 / (1.0 + pair_dist_sq<S>(yi, yj));
                const double mult = (row(j) - w * inv_z) * w;
                for (int d = 0; d < S; ++d) acc[d] += mult * (yi[d] - yj[d]);
            }
            double* g = out.grad.row(i);
            for (int d = 0; d < S; ++d) g[d] = 4.0 * acc[d];
        }
    });
    return out;
}

template <class MakeRow>
GradientField exact_gradient_dispatch(MakeRow make_row, const Matrix& y, int threads) {
    switch (y.cols()) {
        case 2: return exact_gradient_impl<2>(make_row, y, threads);
        case 3: return exact_gradient_impl<3>(make_row, y, threads);
        default: throw std::invalid_argument("exact_gradient: embedding must be 2- or 3-dimensional");
    }
}

// Per-point depth-first traversal accumulating f_rep*Z and the Z estimate in
// a single pass. `f` may be null to estimate Z alone.
template <int S>
void bh_point(const SpaceTree& tree, const Matrix& y, std::int32_t node_index,
              const double* yi, std::int32_t self, double theta, SummaryCondition cond,
              double* f, double& z) {
    const SpaceTree::Node& node = tree.nodes()[static_cast<std::size_t>(node_index)];
    if (node.count == 0) return;

    if (check_summary(node, yi, S, theta, cond, self)) {
        const double dist_sq = pair_dist_sq<S>(yi, node.com.data());
        const double w = static_cast<double>(node.count) / (1.0 + dist_sq);
        z += w;
        if (f != nullptr) {
            const double mult = w / (1.0 + dist_sq);
            for (int d = 0; d < S; ++d) f[d] += mult * (yi[d] - node.com[d]);
        }
        return;
    }
    if (node.is_leaf()) {
        // Exact pairwise terms; only the self-interaction is skipped.
        for (const std::uint32_t j : node.points) {
            if (static_cast<std::int32_t>(j) == self) continue;
            const double* yj = y.row(j);
            const double dist_sq = pair_dist_sq<S>(yi, yj);
            const double w = 1.0 / (1.0 + dist_sq);
            z += w;
            if (f != nullptr) {
                const double mult = w * w;
                for (int d = 0; d < S; ++d) f[d] += mult * (yi[d] - yj[d]);
            }
        }
        return;
    }
    for (int q = 0; q < (1 << S); ++q) {
        bh_point<S>(tree, y, node.first_child + q, yi, self, theta, cond, f, z);
    }
}

// Z estimate over all points via the point-cell traversal.
double bh_z_estimate(const SpaceTree& tree, const Matrix& y, double param,
                     SummaryCondition cond, int threads) {
    const std::size_t n = y.rows();
    std::vector<double> partial(chunk_count(n), 0.0);
    auto run_pass = [&](auto dim_tag) {
        constexpr int S = decltype(dim_tag)::value;
        parallel_chunks(n, threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
            double z = 0.0;
            for (std::size_t i = begin; i < end; ++i) {
                bh_point<S>(tree, y, 0, y.row(i), static_cast<std::int32_t>(i), param, cond,
                            nullptr, z);
            }
            partial[c] = z;
        });
    };
    if (y.cols() == 2) {
        run_pass(std::integral_constant<int, 2>{});
    } else {
        run_pass(std::integral_constant<int, 3>{});
    }
    double z = 0.0;
    for (const double p : partial) z += p;
    return z;
}

// Dual traversal state: per-node point lists are gathered once per call.
template <int S>
struct DualPass {
    const SpaceTree& tree;
    const Matrix& y;
    double rho;
    SummaryCondition cond;
    Matrix& f;
    double z = 0.0;
    std::vector<std::vector<std::uint32_t>> members;

    void collect(std::int32_t index) {
        const SpaceTree::Node& node = tree.nodes()[static_cast<std::size_t>(index)];
        auto& list = members[static_cast<std::size_t>(index)];
        if (node.is_leaf()) {
            list = node.points;
            return;
        }
        for (int q = 0; q < (1 << S); ++q) {
            const std::int32_t child = node.first_child + q;
            if (tree.nodes()[static_cast<std::size_t>(child)].count == 0) continue;
            collect(child);
            const auto& sub = members[static_cast<std::size_t>(child)];
            list.insert(list.end(), sub.begin(), sub.end());
        }
    }

    void add_pair(std::uint32_t i, std::uint32_t j) {
        const double* yi = y.row(i);
        const double* yj = y.row(j);
        const double w = 1.0 / (1.0 + pair_dist_sq<S>(yi, yj));
        z += 2.0 * w;
        const double mult = w * w;
        double* fi = f.row(i);
        double* fj = f.row(j);
        for (int d = 0; d < S; ++d) {
            const double component = mult * (yi[d] - yj[d]);
            fi[d] += component;
            fj[d] -= component;
        }
    }

    // True when the pair condition admits summarizing cells a and b.
    bool pair_summary(const SpaceTree::Node& a, const SpaceTree::Node& b,
                      double dist_sq) const {
        if (dist_sq == 0.0) return false;
        const double r = std::max(a.diagonal, b.diagonal);
        if (cond == SummaryCondition::Standard) return r * r < rho * rho * dist_sq;
        return dist_sq < rho * r;
    }

    void visit(std::int32_t ia, std::int32_t ib) {
        const SpaceTree::Node& a = tree.nodes()[static_cast<std::size_t>(ia)];
        const SpaceTree::Node& b = tree.nodes()[static_cast<std::size_t>(ib)];
        if (a.count == 0 || b.count == 0) return;

        if (ia == ib) {
            // Self-pairs always recurse; a leaf self-pair is handled exactly.
            if (a.is_leaf()) {
                for (std::size_t x = 0; x < a.points.size(); ++x) {
                    for (std::size_t w = x + 1; w < a.points.size(); ++w) {
                        add_pair(a.points[x], a.points[w]);
                    }
                }
                return;
            }
            for (int qa = 0; qa < (1 << S); ++qa) {
                for (int qb = qa; qb < (1 << S); ++qb) {
                    visit(a.first_child + qa, a.first_child + qb);
                }
            }
            return;
        }

        const double dist_sq = pair_dist_sq<S>(a.com.data(), b.com.data());
        if (pair_summary(a, b, dist_sq)) {
            // One cell-cell interaction stands in for all cross pairs.
            const double w = 1.0 / (1.0 + dist_sq);
            z += 2.0 * static_cast<double>(a.count) * static_cast<double>(b.count) * w;
            const double mult = w * w;
            const auto& pa = members[static_cast<std::size_t>(ia)];
            const auto& pb = members[static_cast<std::size_t>(ib)];
            for (int d = 0; d < S; ++d) {
                const double component = mult * (a.com[d] - b.com[d]);
                const double toward_a = static_cast<double>(b.count) * component;
                const double toward_b = static_cast<double>(a.count) * component;
                for (const std::uint32_t i : pa) f(i, static_cast<std::size_t>(d)) += toward_a;
                for (const std::uint32_t j : pb) f(j, static_cast<std::size_t>(d)) -= toward_b;
            }
            return;
        }
        if (a.is_leaf() && b.is_leaf()) {
            for (const std::uint32_t i : a.points) {
                for (const std::uint32_t j : b.points) add_pair(i, j);
            }
            return;
        }
        // Open the larger cell.
        if (!a.is_leaf() && (b.is_leaf() || a.diagonal >= b.diagonal)) {
            for (int q = 0; q < (1 << S); ++q) visit(a.first_child + q, ib);
        } else {
            for (int q = 0; q < (1 << S); ++q) visit(ia, b.first_child + q);
        }
    }
};

}  // namespace

GradientField exact_gradient(const SparseAffinity& p, const Matrix& y, int threads) {
    if (p.n != y.rows()) throw std::invalid_argument("exact_gradient: size mismatch");
    auto make_row = [&p](std::size_t i) {
        return SparseRow{&p, p.row_ptr[i], p.row_ptr[i + 1]};
    };
    return exact_gradient_dispatch(make_row, y, threads);
}

GradientField exact_gradient(const Matrix& dense_p, const Matrix& y, int threads) {
    if (dense_p.rows() != y.rows() || dense_p.rows() != dense_p.cols()) {
        throw std::invalid_argument("exact_gradient: size mismatch");
    }
    auto make_row = [&dense_p](std::size_t i) { return DenseRow{dense_p.row(i)}; };
    return exact_gradient_dispatch(make_row, y, threads);
}

Matrix attractive_forces(const SparseAffinity& p, const Matrix& y, int threads) {
    if (p.n != y.rows()) throw std::invalid_argument("attractive_forces: size mismatch");
    const std::size_t n = y.rows();
    const std::size_t s = y.cols();
    Matrix f(n, s, 0.0);
    parallel_chunks(n, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const double* yi = y.row(i);
            double* fi = f.row(i);
            for (std::size_t e = p.row_ptr[i]; e < p.row_ptr[i + 1]; ++e) {
                const double* yj = y.row(p.cols[e]);
                double dist_sq = 0.0;
                for (std::size_t d = 0; d < s; ++d) {
                    const double diff = yi[d] - yj[d];
                    dist_sq += diff * diff;
                }
                const double mult = p.vals[e] / (1.0 + dist_sq);
                for (std::size_t d = 0; d < s; ++d) fi[d] += mult * (yi[d] - yj[d]);
            }
        }
    });
    return f;
}

RepulsiveField bh_repulsive(const Matrix& y, const SpaceTree& tree, double theta,
                            SummaryCondition condition, int threads) {
    if (tree.point_count() != y.rows()) throw std::invalid_argument("bh_repulsive: size mismatch");
    if (theta < 0.0) throw std::invalid_argument("bh_repulsive: theta must be non-negative");
    const std::size_t n = y.rows();
    RepulsiveField out;
    out.f_rep_z = Matrix(n, y.cols(), 0.0);
    std::vector<double> partial(chunk_count(n), 0.0);

    auto run_pass = [&](auto dim_tag) {
        constexpr int S = decltype(dim_tag)::value;
        parallel_chunks(n, threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
            double z = 0.0;
            for (std::size_t i = begin; i < end; ++i) {
                bh_point<S>(tree, y, 0, y.row(i), static_cast<std::int32_t>(i), theta, condition,
                            out.f_rep_z.row(i), z);
            }
            partial[c] = z;
        });
    };
    if (y.cols() == 2) {
        run_pass(std::integral_constant<int, 2>{});
    } else if (y.cols() == 3) {
        run_pass(std::integral_constant<int, 3>{});
    } else {
        throw std::invalid_argument("bh_repulsive: embedding must be 2- or 3-dimensional");
    }

    for (const double p : partial) out.z += p;
    if (out.z <= 0.0) throw NumericError("bh_repulsive: non-positive Z estimate");
    return out;
}

RepulsiveField dual_tree_repulsive(const Matrix& y, const SpaceTree& tree, double rho,
                                   SummaryCondition condition) {
    if (tree.point_count() != y.rows()) {
        throw std::invalid_argument("dual_tree_repulsive: size mismatch");
    }
    if (rho < 0.0) throw std::invalid_argument("dual_tree_repulsive: rho must be non-negative");
    RepulsiveField out;
    out.f_rep_z = Matrix(y.rows(), y.cols(), 0.0);

    auto run_pass = [&](auto dim_tag) {
        constexpr int S = decltype(dim_tag)::value;
        DualPass<S> pass{tree, y, rho, condition, out.f_rep_z};
        pass.members.resize(tree.nodes().size());
        pass.collect(0);
        pass.visit(0, 0);
        out.z = pass.z;
    };
    if (y.cols() == 2) {
        run_pass(std::integral_constant<int, 2>{});
    } else if (y.cols() == 3) {
        run_pass(std::integral_constant<int, 3>{});
    } else {
        throw std::invalid_argument("dual_tree_repulsive: embedding must be 2- or 3-dimensional");
    }
    if (out.z <= 0.0) throw NumericError("dual_tree_repulsive: non-positive Z estimate");
    return out;
}

double approx_kl_cost(const SparseAffinity& p, const Matrix& y, const SpaceTree& tree,
                      double param, SummaryCondition condition, double p_scale, int threads) {
    if (p.n != y.rows() || tree.point_count() != y.rows()) {
        throw std::invalid_argument("approx_kl_cost: size mismatch");
    }
    const double z = bh_z_estimate(tree, y, param, condition, threads);
    const double log_z = std::log(z);
    const std::size_t n = y.rows();
    const std::size_t s = y.cols();

    std::vector<double> partial(chunk_count(n), 0.0);
    parallel_chunks(n, threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        double cost = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            const double* yi = y.row(i);
            for (std::size_t e = p.row_ptr[i]; e < p.row_ptr[i + 1]; ++e) {
                const double pv = p.vals[e] * p_scale;
                if (pv <= 0.0) continue;
                const double* yj = y.row(p.cols[e]);
                double dist_sq = 0.0;
                for (std::size_t d = 0; d < s; ++d) {
                    const double diff = yi[d] - yj[d];
                    dist_sq += diff * diff;
                }
                cost += pv * (std::log(pv * (1.0 + dist_sq)) + log_z);
            }
        }
        partial[c] = cost;
    });
    double cost = 0.0;
    for (const double v : partial) cost += v;
    return cost;
}

ForceSplit split_forces(const Matrix& f_attr, const RepulsiveField& repulsive) {
    ForceSplit out;
    out.f_attr = f_attr;
    out.f_rep = repulsive.f_rep_z;
    const double inv_z = 1.0 / repulsive.z;
    for (auto& v : out.f_rep.values()) v *= inv_z;
    return out;
}

GradientField combine_forces(const Matrix& f_attr, const RepulsiveField& repulsive) {
    GradientField out;
    out.z = repulsive.z;
    out.grad = Matrix(f_attr.rows(), f_attr.cols());
    const double inv_z = 1.0 / repulsive.z;
    for (std::size_t e = 0; e < out.grad.size(); ++e) {
        out.grad.values()[e] =
            4.0 * (f_attr.values()[e] - repulsive.f_rep_z.values()[e] * inv_z);
    }
    return out;
}

GradientField compute_gradient(const SparseAffinity& p, const Matrix& y, const RunConfig& cfg) {
    switch (cfg.algorithm) {
        case Algorithm::Exact:
            return exact_gradient(p, y, cfg.threads);
        case Algorithm::BarnesHut: {
            const SpaceTree tree(y);
            return combine_forces(attractive_forces(p, y, cfg.threads),
                                  bh_repulsive(y, tree, cfg.theta, cfg.condition, cfg.threads));
        }
        case Algorithm::DualTree: {
            const SpaceTree tree(y);
            return combine_forces(attractive_forces(p, y, cfg.threads),
                                  dual_tree_repulsive(y, tree, cfg.rho, cfg.condition));
        }
    }
    throw std::logic_error("compute_gradient: unknown algorithm");
}

}  // namespace bhsne
