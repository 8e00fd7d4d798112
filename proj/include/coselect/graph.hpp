#pragma once

#include <span>

#include "coselect/dataset.hpp"

namespace coselect {

enum class GraphKind { PerView, Consensus };

/// Row-stochastic n x n affinity: s_ij >= 0 and every row sums to one.
struct SimilarityGraph {
    Matrix weights;
    GraphKind kind = GraphKind::PerView;

    [[nodiscard]] Eigen::Index size() const { return weights.rows(); }
};

/// k-NN affinity over the columns of `x` using the adaptive-neighbor
/// allocation s_ij = (d_{i,k+1} - d_ij) / sum_h (d_{i,k+1} - d_ih), with d the
/// squared Euclidean distance. Self is excluded. Rows whose allocation
/// degenerates (all k+1 distances tied, or k = n-1) fall back to 1/k on the k
/// nearest.
SimilarityGraph knn_graph(const Matrix& x, int k);

/// D - A with A = (M + M^T)/2 and D = diag(A 1).
Matrix laplacian(const Matrix& m);

/// Laplacian of the complement affinity 1 - s_ij with its diagonal zeroed.
Matrix complement_laplacian(const Matrix& s);

struct RootResult {
    double root = 0.0;
    int newton_steps = 0;
    bool used_bisection = false;
};

/// Root of f(p) = (1/n) sum_j (p - q_j)_+ - p, which is convex and strictly
/// decreasing wherever it can vanish. Requires sum(q) > 0 so a root exists.
/// Newton from p0 = mean(q) - 1/n; bisection if Newton stalls or exceeds
/// `max_newton` steps.
RootResult newton_simplex_root(std::span<const double> q, double tol = 1e-12, int max_newton = 100);

/// Euclidean projection of `v` onto the probability simplex: shift to sum one,
/// then clip at the Newton root.
Vector project_to_simplex(const Vector& v);

enum class ConsensusWeighting {
    /// Uniform 1/V average of P^(v) with per-view alpha/(4 V gamma^r) scaling.
    Uniform,
    /// gamma^r-weighted average; the exact row minimiser for unequal gammas.
    GammaWeighted,
};

/// Per-row consensus update. `b` is the n x n consistent representation whose
/// row distances a_ij = ||B_i - B_j||^2 push mass toward dissimilar rows.
SimilarityGraph update_consensus_graph(std::span<const Matrix> view_graphs, const Matrix& b, double alpha,
                                       const Vector& gamma, double r, double eps,
                                       ConsensusWeighting weighting = ConsensusWeighting::GammaWeighted);

/// a_ij = ||B_i - B_j||_2^2.
Matrix pairwise_row_sq_dists(const Matrix& b);

} // namespace coselect
