#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace coselect {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Label-free view of a multi-view dataset: V matrices of shape d_v x n that
/// share the same n instance columns. This is all the solver ever sees.
class ViewSet {
public:
    ViewSet() = default;
    explicit ViewSet(std::vector<Matrix> views);

    [[nodiscard]] std::size_t num_views() const { return views_.size(); }
    [[nodiscard]] Eigen::Index num_instances() const { return views_.empty() ? 0 : views_.front().cols(); }
    [[nodiscard]] std::vector<Eigen::Index> view_dims() const;
    [[nodiscard]] Eigen::Index total_features() const;
    [[nodiscard]] const Matrix& view(std::size_t v) const { return views_.at(v); }
    [[nodiscard]] std::span<const Matrix> views() const { return views_; }

private:
    std::vector<Matrix> views_;
};

/// Immutable multi-view dataset. Labels are carried for evaluation only.
class MultiViewDataset {
public:
    MultiViewDataset() = default;
    explicit MultiViewDataset(std::vector<Matrix> views, std::optional<std::vector<int>> labels = std::nullopt);

    [[nodiscard]] const ViewSet& unlabeled() const { return views_; }
    [[nodiscard]] std::size_t num_views() const { return views_.num_views(); }
    [[nodiscard]] Eigen::Index num_instances() const { return views_.num_instances(); }
    [[nodiscard]] std::vector<Eigen::Index> view_dims() const { return views_.view_dims(); }
    [[nodiscard]] const Matrix& view(std::size_t v) const { return views_.view(v); }
    [[nodiscard]] bool has_labels() const { return labels_.has_value(); }
    [[nodiscard]] const std::vector<int>& labels() const;
    [[nodiscard]] int num_classes() const;

private:
    ViewSet views_;
    std::optional<std::vector<int>> labels_;
};

enum class Normalization { None, ZScorePerFeature, UnitL2PerInstance };

Normalization parse_normalization(const std::string& name);
std::string to_string(Normalization mode);

/// Transforms every view independently. Rows with (near) zero spread map to
/// zero under zscore; zero columns stay zero under unit-l2.
MultiViewDataset normalize_views(const MultiViewDataset& ds, Normalization mode, double eps = 1e-12);

struct SynthesisSpec {
    Eigen::Index n = 60;
    std::vector<Eigen::Index> view_dims{20, 30};
    int classes = 3;
    double noise = 0.5;
    std::uint64_t seed = 1;
};

/// Class-clustered multi-view data: shared latent class means pushed through a
/// random linear map per view, plus isotropic Gaussian noise. Instance i has
/// class i mod classes.
MultiViewDataset synthesize(const SynthesisSpec& spec);

/// Data manifest (key = value lines):
///   view = path            one line per view, in order
///   labels = path          optional, one integer per line
///   orientation = features_by_instances | instances_by_features
///   header = true | false  first CSV line is a header row
/// Relative paths resolve against the manifest's directory.
struct Manifest {
    std::vector<std::filesystem::path> views;
    std::optional<std::filesystem::path> labels;
    bool instances_by_features = false;
    bool header = false;
};

Manifest read_manifest(const std::filesystem::path& manifest_path);
MultiViewDataset load_dataset(const std::filesystem::path& manifest_path);
MultiViewDataset load_dataset(const Manifest& manifest);

/// Writes views as features x instances CSVs plus a manifest; returns the manifest path.
std::filesystem::path save_dataset(const MultiViewDataset& ds, const std::filesystem::path& dir);

Matrix read_csv_matrix(const std::filesystem::path& path, bool header);
void write_csv_matrix(const std::filesystem::path& path, const Matrix& m);

} // namespace coselect
