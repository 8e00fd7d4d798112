#include "coselect/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include <fmt/format.h>

namespace coselect {

SimilarityGraph knn_graph(const Matrix& x, int k)
{
    const Eigen::Index n = x.cols();
    if (k < 1 || k >= n) {
        throw std::invalid_argument(fmt::format("knn_graph: need 1 <= k < n, got k={} n={}", k, n));
    }
    if (!x.allFinite()) {
        throw std::invalid_argument("knn_graph: non-finite input");
    }
    const auto kk = static_cast<std::size_t>(k);

    Matrix s = Matrix::Zero(n, n);
    std::vector<std::pair<double, Eigen::Index>> nbrs;
    for (Eigen::Index i = 0; i < n; ++i) {
        nbrs.clear();
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j != i) {
                nbrs.emplace_back((x.col(i) - x.col(j)).squaredNorm(), j);
            }
        }
        const auto keep = std::min(kk + 1, nbrs.size());
        std::partial_sort(nbrs.begin(), nbrs.begin() + static_cast<std::ptrdiff_t>(keep), nbrs.end());

        bool uniform = (keep == kk); // no (k+1)-th neighbour exists
        if (!uniform) {
            const double far = nbrs[kk].first;
            double denom = 0.0;
            for (std::size_t h = 0; h < kk; ++h) {
                denom += far - nbrs[h].first;
            }
            if (denom <= std::numeric_limits<double>::epsilon() * static_cast<double>(k) * far || denom <= 0.0) {
                uniform = true;
            } else {
                for (std::size_t h = 0; h < kk; ++h) {
                    s(i, nbrs[h].second) = (far - nbrs[h].first) / denom;
                }
            }
        }
        if (uniform) {
            for (std::size_t h = 0; h < kk; ++h) {
                s(i, nbrs[h].second) = 1.0 / static_cast<double>(k);
            }
        }
    }
    return {std::move(s), GraphKind::PerView};
}

Matrix laplacian(const Matrix& m)
{
    if (m.rows() != m.cols()) {
        throw std::invalid_argument("laplacian: matrix must be square");
    }
    const Matrix a = 0.5 * (m + m.transpose());
    Matrix l = -a;
    l.diagonal() += a.rowwise().sum();
    return l;
}

Matrix complement_laplacian(const Matrix& s)
{
    Matrix c = Matrix::Ones(s.rows(), s.cols()) - s;
    c.diagonal().setZero();
    return laplacian(c);
}

namespace {

double root_residual(std::span<const double> q, double p, Eigen::Index* below = nullptr)
{
    double sum = 0.0;
    Eigen::Index count = 0;
    for (const double qj : q) {
        if (qj < p) {
            sum += p - qj;
            ++count;
        }
    }
    if (below != nullptr) {
        *below = count;
    }
    return sum / static_cast<double>(q.size()) - p;
}

} // namespace

RootResult newton_simplex_root(std::span<const double> q, double tol, int max_newton)
{
    if (q.empty()) {
        throw std::invalid_argument("newton_simplex_root: empty vector");
    }
    const double n = static_cast<double>(q.size());
    double total = 0.0;
    double scale = 1.0;
    for (const double qj : q) {
        if (!std::isfinite(qj)) {
            throw std::invalid_argument("newton_simplex_root: non-finite entry");
        }
        total += qj;
        scale = std::max(scale, std::abs(qj));
    }
    if (!(total > 0.0)) {
        throw std::invalid_argument("newton_simplex_root: entries must have a positive sum for a root to exist");
    }
    const double abs_tol = tol * scale;

    RootResult result;
    double p = total / n - 1.0 / n;
    for (int step = 0; step < max_newton; ++step) {
        Eigen::Index below = 0;
        const double f = root_residual(q, p, &below);
        if (std::abs(f) <= abs_tol) {
            result.root = p;
            result.newton_steps = step;
            return result;
        }
        const double slope = static_cast<double>(below) / n - 1.0;
        if (slope == 0.0) {
            break;
        }
        const double next = p - f / slope;
        result.newton_steps = step + 1;
        if (next == p) {
            break;
        }
        p = next;
    }

    // f(lo) = -lo > 0 and f(hi) = -mean(q) < 0
    result.used_bisection = true;
    double lo = std::min(*std::min_element(q.begin(), q.end()), 0.0) - 1.0;
    double hi = *std::max_element(q.begin(), q.end());
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) {
            break;
        }
        const double f = root_residual(q, mid);
        if (std::abs(f) <= abs_tol) {
            lo = hi = mid;
            break;
        }
        (f > 0.0 ? lo : hi) = mid;
    }
    result.root = 0.5 * (lo + hi);
    return result;
}

Vector project_to_simplex(const Vector& v)
{
    const auto n = static_cast<double>(v.size());
    const Vector q = (v.array() - v.mean() + 1.0 / n).matrix();
    const double root = newton_simplex_root({q.data(), static_cast<std::size_t>(q.size())}).root;
    return (q.array() - root).max(0.0).matrix();
}

Matrix pairwise_row_sq_dists(const Matrix& b)
{
    const Eigen::Index n = b.rows();
    Matrix a = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = (b.row(i) - b.row(j)).squaredNorm();
            a(i, j) = d;
            a(j, i) = d;
        }
    }
    return a;
}

SimilarityGraph update_consensus_graph(std::span<const Matrix> view_graphs, const Matrix& b, double alpha,
                                       const Vector& gamma, double r, double eps, ConsensusWeighting weighting)
{
    const auto views = view_graphs.size();
    if (views == 0 || static_cast<std::size_t>(gamma.size()) != views) {
        throw std::invalid_argument("update_consensus_graph: one gamma per view graph required");
    }
    const Eigen::Index n = view_graphs.front().rows();
    if (b.rows() != n || !b.allFinite()) {
        throw std::invalid_argument("update_consensus_graph: B must be finite with n rows");
    }
    const double nv = static_cast<double>(views);
    Vector gamma_r(static_cast<Eigen::Index>(views));
    for (std::size_t v = 0; v < views; ++v) {
        gamma_r(static_cast<Eigen::Index>(v)) = std::pow(std::max(gamma(static_cast<Eigen::Index>(v)), eps), r);
    }

    // target row = sum_v w_v S^(v)_i + c * A_i
    Vector view_weight(static_cast<Eigen::Index>(views));
    double dist_coeff = 0.0;
    if (weighting == ConsensusWeighting::Uniform) {
        view_weight.setConstant(1.0 / nv);
        dist_coeff = alpha / (4.0 * nv * nv) * gamma_r.cwiseInverse().sum();
    } else {
        view_weight = gamma_r / gamma_r.sum();
        dist_coeff = alpha / (4.0 * gamma_r.sum());
    }

    Matrix base = Matrix::Zero(n, n);
    for (std::size_t v = 0; v < views; ++v) {
        base += view_weight(static_cast<Eigen::Index>(v)) * view_graphs[v];
    }
    if (alpha != 0.0) {
        base += dist_coeff * pairwise_row_sq_dists(b);
    }

    Matrix s(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        s.row(i) = project_to_simplex(base.row(i).transpose()).transpose();
    }
    return {std::move(s), GraphKind::Consensus};
}

} // namespace coselect
