#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coselect/dataset.hpp"
#include "coselect/graph.hpp"

namespace coselect {

enum class WStep {
    /// Take the closed-form W as is.
    ClosedForm,
    /// Whiten the closed form onto W^T X X^T W = I, then accept the best
    /// non-increasing point on the whitened path from the previous W.
    Guarded,
};

struct Hyperparams {
    double r = 2.0;       ///< weight sharpness exponent, must exceed 1
    double theta = 1.0;   ///< row sparsity of the consistent representation
    double alpha = 1e-3;  ///< graph / diversity weight
    int c = 0;            ///< projection dimension; 0 picks a default from the data
    int k = 5;            ///< neighbours in the per-view graphs
    double epsilon = 1e-8;
    double tol = 1e-6;
    int max_iter = 100;
    int inner_sweeps = 2;     ///< reweighted B / B^(v) solves per cycle
    bool extrapolate = true;  ///< guarded over-relaxation after each cycle (guarded W step only)
    std::uint64_t seed = 0;
    ConsensusWeighting consensus_weighting = ConsensusWeighting::Uniform;
    WStep w_step = WStep::Guarded;

    void validate() const;
};

/// c = num_classes when known, else ceil(min(sqrt(n), min_v d_v)); clipped to
/// [1, min(min_v d_v, n)].
int resolve_projection_dim(const Hyperparams& hp, const ViewSet& views, std::optional<int> num_classes = {});

enum class Variant {
    Full,
    NoGraph,      ///< drops the consensus graph and every alpha term
    NoConsensus,  ///< drops B; per-view representations only
};

Variant parse_variant(const std::string& name);
std::string to_string(Variant v);

struct ViewWeights {
    Vector lambda;
    Vector eta;
    Vector gamma;

    static ViewWeights uniform(std::size_t views);
};

struct ModelState {
    Variant variant = Variant::Full;
    std::vector<Matrix> w;            ///< d_v x c projections
    Matrix b;                         ///< n x n consistent representation
    std::vector<Matrix> b_views;      ///< n x n view-specific representations
    Matrix s;                         ///< consensus graph
    std::vector<Matrix> view_graphs;  ///< fixed per-view kNN graphs
    ViewWeights weights;
};

struct ObjectiveTerms {
    double reconstruction = 0.0;
    double w_penalty = 0.0;      ///< sum_v lambda^r ||W||_21
    double bv_penalty = 0.0;     ///< sum_v eta^r ||B^(v)||_21
    double b_penalty = 0.0;      ///< theta ||B||_21
    double diversity = 0.0;      ///< alpha/2 sum_ij ||B_i - B_j||^2 (1 - s_ij)
    double specific_graph = 0.0; ///< alpha/2 sum_v sum_ij ||B^(v)_i - B^(v)_j||^2 s^(v)_ij
    double graph_fitting = 0.0;  ///< sum_v gamma^r ||S - S^(v)||_F^2
    double total = 0.0;
};

struct TraceRecord {
    int iteration = 0;
    ObjectiveTerms terms;
    double relative_change = 0.0;
    double orthogonality_gap = 0.0; ///< max_v ||W^T X X^T W - I||_F
};

struct ConvergenceTrace {
    std::vector<TraceRecord> records;
    bool converged = false;

    [[nodiscard]] std::string to_csv() const;
};

struct FitResult {
    ModelState state;
    ConvergenceTrace trace;
};

// ---- block primitives ------------------------------------------------------

double l21_norm(const Matrix& m);

/// Diagonal of the IRLS reweighting: 1 / (2 ||M_i.|| + eps).
Vector row_weight_diag(const Matrix& m, double eps);

/// The c eigenvectors of a symmetric matrix with the smallest eigenvalues,
/// signs fixed so each column's largest-magnitude entry is positive.
Matrix smallest_eigenvectors(const Matrix& h, int c);

enum class WPath { Auto, Direct, Woodbury };

/// W = (X X^T + lambda^r D)^-1 X Y, Y the bottom-c eigenvectors of
/// H = (I - B - B^(v))(I - B - B^(v))^T. Auto uses the n x n Woodbury form
/// when d_v > n.
Matrix update_w(const Matrix& x, const Matrix& b, const Matrix& b_view, double lambda, double r, int c,
                const Vector& d_v1, double eps, WPath path = WPath::Auto);

/// Closed-form W given the eigenvector block Y directly.
Matrix solve_w(const Matrix& x, const Matrix& y, double lambda_r, const Vector& d_v1, WPath path);

/// W (W^T X X^T W)^{-1/2}; directions with energy below `floor` (relative to
/// the largest) are dropped rather than amplified.
Matrix whiten_projection(const Matrix& x, const Matrix& w, double floor = 1e-10);

/// Orthogonal R minimising ||W R - target||_F, applied to W. Row norms, the
/// reconstruction term and W^T X X^T W = I are all invariant under R.
Matrix align_rotation(const Matrix& w, const Matrix& target);

/// K_v = X^T W W^T X.
Matrix projected_gram(const Matrix& x, const Matrix& w);

Matrix update_b(std::span<const Matrix> xs, std::span<const Matrix> ws, std::span<const Matrix> b_views,
                const Matrix& l_sbar, double alpha, double theta, const Vector& d_b);

Matrix update_b_view(const Matrix& x, const Matrix& w, const Matrix& b, const Matrix& l_sv, double alpha, double eta,
                     double r, const Vector& d_v2, double eps);

/// Closed-form adaptive weights; one family normalised from the given norms.
Vector adaptive_weights(const Vector& norms, double r, double eps);

ViewWeights update_weights(std::span<const Matrix> ws, std::span<const Matrix> b_views, const Matrix& s,
                           std::span<const Matrix> view_graphs, double r, double eps);

ObjectiveTerms objective(const ModelState& state, const ViewSet& views, const Hyperparams& hp);

// ---- drivers ---------------------------------------------------------------

/// Alternating minimisation W -> B -> B^(v) -> S -> weights until the relative
/// objective change drops below hp.tol or hp.max_iter cycles run. hp.c must be
/// resolved (> 0) or is defaulted from the data without labels.
FitResult fit(const ViewSet& views, const Hyperparams& hp);
FitResult fit(const MultiViewDataset& ds, const Hyperparams& hp);
FitResult fit_variant(const ViewSet& views, const Hyperparams& hp, Variant variant);
FitResult fit_variant(const MultiViewDataset& ds, const Hyperparams& hp, Variant variant);

} // namespace coselect
