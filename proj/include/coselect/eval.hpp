#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "coselect/selection.hpp"

namespace coselect {

enum class Classifier { OneNN, NearestCentroid };

Classifier parse_classifier(const std::string& name);
std::string to_string(Classifier c);

struct ClassStats {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    int support = 0;
};

struct Metrics {
    double acc = 0.0;
    double f1 = 0.0; ///< unweighted mean over classes in truth or predictions
    std::map<int, ClassStats> per_class;
};

Metrics compute_metrics(std::span<const int> truth, std::span<const int> predicted);

struct EvalReport {
    Metrics metrics;
    std::size_t evaluated = 0;
    std::vector<int> classes_missing_from_training;
    double feature_ratio = 0.0;
    double instance_ratio = 0.0;
    Classifier classifier = Classifier::OneNN;
    std::uint64_t seed = 0;

    [[nodiscard]] double acc() const { return metrics.acc; }
    [[nodiscard]] double f1() const { return metrics.f1; }
    [[nodiscard]] std::string to_json() const;
};

/// Columns: concatenation across views of the selected feature rows.
Matrix selected_representation(const MultiViewDataset& ds, const SelectionResult& sel);

/// Predicts a label for each query column from the training columns.
std::vector<int> classify(const Matrix& train, std::span<const int> train_labels, const Matrix& query,
                          Classifier classifier);

/// Trains on the selected instances, predicts every unselected one and scores
/// only those predictions.
EvalReport evaluate(const MultiViewDataset& ds, const SelectionResult& sel, Classifier classifier,
                    std::uint64_t seed = 0);

struct SweepOptions {
    std::vector<double> feature_ratios{0.1, 0.2, 0.3, 0.4, 0.5};
    std::vector<double> instance_ratios{0.1, 0.2, 0.3, 0.4, 0.5};
    int repeats = 1;
    Classifier classifier = Classifier::OneNN;
    Variant variant = Variant::Full;
    int jobs = 1;
};

struct SweepRow {
    double feature_ratio = 0.0;
    double instance_ratio = 0.0;
    double acc = 0.0;
    double f1 = 0.0;
    int repeats = 0;
    std::uint64_t seed = 0;
    std::vector<double> acc_runs;
    std::vector<double> f1_runs;
};

struct SweepTable {
    std::vector<SweepRow> rows;

    [[nodiscard]] std::string to_csv() const;
    [[nodiscard]] std::string to_json() const;
};

/// One fit per repeat (seed = hp.seed + repeat), then select and evaluate
/// every (feature_ratio, instance_ratio) cell; values averaged over repeats.
/// Labels only set the projection dimension when hp.c == 0.
SweepTable ratio_sweep(const MultiViewDataset& ds, const Hyperparams& hp, const SweepOptions& opts);

struct AblationRow {
    std::string metric;
    Variant variant = Variant::Full;
    double value = 0.0;
};

struct AblationTable {
    std::string dataset;
    std::vector<AblationRow> rows; ///< ACC then F1, each full / no-graph / no-consensus

    [[nodiscard]] std::string to_csv() const;
    [[nodiscard]] double value(const std::string& metric, Variant v) const;
};

AblationTable ablate(const MultiViewDataset& ds, const Hyperparams& hp, double feature_ratio, double instance_ratio,
                     int repeats, Classifier classifier, const std::string& dataset_name, int jobs = 1);

} // namespace coselect
