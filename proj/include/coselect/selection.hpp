#pragma once

#include <span>
#include <string>
#include <vector>

#include "coselect/solver.hpp"

namespace coselect {

/// MvIS_i = ||B_i||^2 + sum_v eta_v / (||B^(v)_i||^2 + eps).
Vector mvis_scores(const Matrix& b, std::span<const Matrix> b_views, const Vector& eta, double eps);

struct FeatureRef {
    std::size_t view = 0;
    Eigen::Index feature = 0;
    double score = 0.0;
};

struct FeatureScores {
    std::vector<Vector> per_view;    ///< ||W^(v)_j||_2 for each feature j
    std::vector<FeatureRef> ranking; ///< all (view, feature) pairs, best first
};

/// Row-norm feature scores with a global ranking across views; ties go to the
/// lower (view, feature) index. `per_view_normalized` divides each view's
/// scores by that view's maximum before ranking.
FeatureScores feature_scores(std::span<const Matrix> ws, bool per_view_normalized = false);

/// Indices sorted by descending score, ties by ascending index.
std::vector<Eigen::Index> rank_descending(const Vector& scores);

/// ceil(ratio * total), with a small guard so 0.2 * 10 gives 2, not 3.
Eigen::Index selection_count(double ratio, Eigen::Index total);

struct SelectionResult {
    Vector instance_scores;
    std::vector<Eigen::Index> instance_ranking;
    FeatureScores features;
    std::vector<Eigen::Index> selected_instances;
    std::vector<std::vector<Eigen::Index>> selected_features; ///< per view, by descending score
    double feature_ratio = 0.0;
    double instance_ratio = 0.0;

    [[nodiscard]] std::string to_json() const;
    [[nodiscard]] std::string instance_ranking_csv() const;
    [[nodiscard]] std::string feature_ranking_csv() const;
};

struct SelectOptions {
    double eps = 1e-8;
    bool per_view_normalized = false;
};

/// MvIS scores of a fitted state (B is all zeros for the no-consensus model).
Vector instance_scores(const ModelState& state, double eps);

SelectionResult select(const ModelState& state, double feature_ratio, double instance_ratio,
                       const SelectOptions& opts = {});

} // namespace coselect
