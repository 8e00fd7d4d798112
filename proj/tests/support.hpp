#pragma once

// Seeded generators and slow-but-obvious reference implementations shared by
// the unit and acceptance tests. Nothing here calls into the library code it
// is used to check.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace testing_support {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

inline Matrix uniform_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo = -1.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> d(lo, hi);
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            m(i, j) = d(rng);
        }
    }
    return m;
}

inline Matrix normal_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double sd = 1.0)
{
    std::normal_distribution<double> d(0.0, sd);
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            m(i, j) = d(rng);
        }
    }
    return m;
}

inline Vector uniform_vector(Rng& rng, Eigen::Index n, double lo = -1.0, double hi = 1.0)
{
    return uniform_matrix(rng, n, 1, lo, hi).col(0);
}

inline int uniform_int(Rng& rng, int lo, int hi)
{
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Random row-stochastic matrix with a zero diagonal.
inline Matrix random_affinity(Rng& rng, Eigen::Index n)
{
    Matrix m = uniform_matrix(rng, n, n, 0.0, 1.0);
    m.diagonal().setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
        m.row(i) /= m.row(i).sum();
    }
    return m;
}

/// Sort-and-threshold Euclidean projection onto {x >= 0, sum x = 1}.
inline Vector sort_simplex_projection(const Vector& v)
{
    std::vector<double> u(v.data(), v.data() + v.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0;
    double tau = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cumsum += u[j];
        const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
        if (u[j] - t > 0.0) {
            tau = t;
        }
    }
    return (v.array() - tau).max(0.0).matrix();
}

/// sum_i ||M_i.||_2 with an explicit loop.
inline double naive_l21(const Matrix& m)
{
    double total = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        double sq = 0.0;
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            sq += m(i, j) * m(i, j);
        }
        total += std::sqrt(sq);
    }
    return total;
}

/// sum_ij ||B_i - B_j||^2 w_ij with explicit loops.
inline double naive_pair_sum(const Matrix& b, const Matrix& w)
{
    double total = 0.0;
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
        for (Eigen::Index j = 0; j < b.rows(); ++j) {
            double sq = 0.0;
            for (Eigen::Index c = 0; c < b.cols(); ++c) {
                const double d = b(i, c) - b(j, c);
                sq += d * d;
            }
            total += sq * w(i, j);
        }
    }
    return total;
}

inline double rel_diff(double a, double b)
{
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

inline double max_abs(const Matrix& m)
{
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("coselect-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace testing_support
