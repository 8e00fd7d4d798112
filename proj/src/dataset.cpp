#include "coselect/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

#include "coselect/io.hpp"

namespace coselect {

namespace fs = std::filesystem;

ViewSet::ViewSet(std::vector<Matrix> views) : views_(std::move(views))
{
    if (views_.empty()) {
        throw std::invalid_argument("dataset needs at least one view");
    }
    const auto n = views_.front().cols();
    if (n < 2) {
        throw std::invalid_argument("dataset needs at least two instances");
    }
    for (std::size_t v = 0; v < views_.size(); ++v) {
        const auto& x = views_[v];
        if (x.rows() < 1 || x.cols() < 1) {
            throw std::invalid_argument(fmt::format("view {} is empty", v));
        }
        if (x.cols() != n) {
            throw std::invalid_argument(
                fmt::format("instance count mismatch: view 0 has {} instances, view {} has {}", n, v, x.cols()));
        }
        if (!x.allFinite()) {
            throw std::invalid_argument(fmt::format("view {} contains non-finite entries", v));
        }
    }
}

std::vector<Eigen::Index> ViewSet::view_dims() const
{
    std::vector<Eigen::Index> dims;
    dims.reserve(views_.size());
    for (const auto& x : views_) {
        dims.push_back(x.rows());
    }
    return dims;
}

Eigen::Index ViewSet::total_features() const
{
    Eigen::Index total = 0;
    for (const auto& x : views_) {
        total += x.rows();
    }
    return total;
}

MultiViewDataset::MultiViewDataset(std::vector<Matrix> views, std::optional<std::vector<int>> labels)
    : views_(std::move(views)), labels_(std::move(labels))
{
    if (labels_ && static_cast<Eigen::Index>(labels_->size()) != views_.num_instances()) {
        throw std::invalid_argument(fmt::format("labels have length {} but dataset has {} instances",
                                                labels_->size(), views_.num_instances()));
    }
}

const std::vector<int>& MultiViewDataset::labels() const
{
    if (!labels_) {
        throw std::logic_error("dataset has no labels");
    }
    return *labels_;
}

int MultiViewDataset::num_classes() const
{
    if (!labels_) {
        return 0;
    }
    return static_cast<int>(std::set<int>(labels_->begin(), labels_->end()).size());
}

Normalization parse_normalization(const std::string& name)
{
    if (name == "none") {
        return Normalization::None;
    }
    if (name == "zscore" || name == "zscore-per-feature") {
        return Normalization::ZScorePerFeature;
    }
    if (name == "unit-l2" || name == "unit-l2-per-instance") {
        return Normalization::UnitL2PerInstance;
    }
    throw std::invalid_argument("unknown normalization mode: " + name);
}

std::string to_string(Normalization mode)
{
    switch (mode) {
    case Normalization::None: return "none";
    case Normalization::ZScorePerFeature: return "zscore-per-feature";
    case Normalization::UnitL2PerInstance: return "unit-l2-per-instance";
    }
    return "none";
}

MultiViewDataset normalize_views(const MultiViewDataset& ds, Normalization mode, double eps)
{
    std::vector<Matrix> views;
    views.reserve(ds.num_views());
    for (std::size_t v = 0; v < ds.num_views(); ++v) {
        Matrix x = ds.view(v);
        switch (mode) {
        case Normalization::None:
            break;
        case Normalization::ZScorePerFeature:
            for (Eigen::Index i = 0; i < x.rows(); ++i) {
                const double mean = x.row(i).mean();
                x.row(i).array() -= mean;
                const double sd = std::sqrt(x.row(i).squaredNorm() / static_cast<double>(x.cols()));
                if (sd > eps) {
                    x.row(i) /= sd;
                } else {
                    x.row(i).setZero();
                }
            }
            break;
        case Normalization::UnitL2PerInstance:
            for (Eigen::Index j = 0; j < x.cols(); ++j) {
                const double norm = x.col(j).norm();
                if (norm > eps) {
                    x.col(j) /= norm;
                }
            }
            break;
        }
        views.push_back(std::move(x));
    }
    return ds.has_labels() ? MultiViewDataset(std::move(views), ds.labels()) : MultiViewDataset(std::move(views));
}

MultiViewDataset synthesize(const SynthesisSpec& spec)
{
    if (spec.classes < 2) {
        throw std::invalid_argument("synthesize: classes must be >= 2");
    }
    if (spec.n < spec.classes) {
        throw std::invalid_argument("synthesize: n must be >= classes");
    }
    if (spec.view_dims.empty()) {
        throw std::invalid_argument("synthesize: need at least one view");
    }
    if (std::any_of(spec.view_dims.begin(), spec.view_dims.end(), [](auto d) { return d < 1; })) {
        throw std::invalid_argument("synthesize: view dimensions must be >= 1");
    }
    if (!(spec.noise >= 0.0) || !std::isfinite(spec.noise)) {
        throw std::invalid_argument("synthesize: noise must be finite and >= 0");
    }

    constexpr double class_spread = 2.0;
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto draw = [&](Eigen::Index rows, Eigen::Index cols, double scale) {
        Matrix m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j) {
            for (Eigen::Index i = 0; i < rows; ++i) {
                m(i, j) = scale * gauss(rng);
            }
        }
        return m;
    };

    const Eigen::Index latent = spec.classes;
    const Matrix means = draw(latent, spec.classes, class_spread);

    std::vector<int> labels(static_cast<std::size_t>(spec.n));
    for (Eigen::Index i = 0; i < spec.n; ++i) {
        labels[static_cast<std::size_t>(i)] = static_cast<int>(i % spec.classes);
    }

    std::vector<Matrix> views;
    for (const auto d : spec.view_dims) {
        const Matrix map = draw(d, latent, 1.0 / std::sqrt(static_cast<double>(latent)));
        const Matrix projected_means = map * means;
        Matrix x(d, spec.n);
        for (Eigen::Index i = 0; i < spec.n; ++i) {
            x.col(i) = projected_means.col(labels[static_cast<std::size_t>(i)]);
        }
        if (spec.noise > 0.0) {
            x += draw(d, spec.n, spec.noise);
        }
        views.push_back(std::move(x));
    }
    return MultiViewDataset(std::move(views), std::move(labels));
}

namespace {

bool parse_bool(const std::string& value, const std::string& key)
{
    if (value == "true" || value == "1" || value == "yes") {
        return true;
    }
    if (value == "false" || value == "0" || value == "no") {
        return false;
    }
    throw std::runtime_error(fmt::format("manifest key '{}' expects true/false, got '{}'", key, value));
}

double parse_cell(std::string_view cell, const fs::path& path, std::size_t line_no)
{
    const auto text = io::trim(cell);
    double value = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    if (!text.empty() && *first == '+') {
        ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (text.empty() || ec != std::errc() || ptr != last) {
        throw std::runtime_error(fmt::format("{}:{}: non-numeric cell '{}'", path.string(), line_no, text));
    }
    if (!std::isfinite(value)) {
        throw std::runtime_error(fmt::format("{}:{}: non-finite cell '{}'", path.string(), line_no, text));
    }
    return value;
}

} // namespace

Matrix read_csv_matrix(const fs::path& path, bool header)
{
    const auto text = io::read_file(path);
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 0;
    std::size_t start = 0;
    bool skipped_header = !header;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) {
            end = text.size();
        }
        ++line_no;
        const auto line = io::trim(std::string_view(text).substr(start, end - start));
        start = end + 1;
        if (line.empty()) {
            continue;
        }
        if (!skipped_header) {
            skipped_header = true;
            continue;
        }
        std::vector<double> row;
        for (const auto& cell : io::split(line, ',')) {
            row.push_back(parse_cell(cell, path, line_no));
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw std::runtime_error(fmt::format("{}:{}: expected {} columns, found {}", path.string(), line_no,
                                                 rows.front().size(), row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw std::runtime_error(fmt::format("{}: empty view", path.string()));
    }
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return m;
}

void write_csv_matrix(const fs::path& path, const Matrix& m)
{
    std::string out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0) {
                out += ',';
            }
            // shortest representation that round-trips exactly
            out += fmt::format("{}", m(i, j));
        }
        out += '\n';
    }
    io::write_file_atomic(path, out);
}

Manifest read_manifest(const fs::path& manifest_path)
{
    const auto text = [&] {
        try {
            return io::read_file(manifest_path);
        } catch (const std::exception&) {
            throw std::runtime_error("cannot read manifest: " + manifest_path.string());
        }
    }();
    const auto base = manifest_path.parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

    Manifest manifest;
    for (const auto& [key, value] : io::parse_key_values(text, manifest_path.string())) {
        if (key == "view") {
            manifest.views.push_back(resolve(value));
        } else if (key == "labels") {
            manifest.labels = resolve(value);
        } else if (key == "orientation") {
            if (value == "features_by_instances") {
                manifest.instances_by_features = false;
            } else if (value == "instances_by_features") {
                manifest.instances_by_features = true;
            } else {
                throw std::runtime_error(
                    fmt::format("{}: unknown orientation '{}'", manifest_path.string(), value));
            }
        } else if (key == "header") {
            manifest.header = parse_bool(value, key);
        } else {
            throw std::runtime_error(fmt::format("{}: unknown manifest key '{}'", manifest_path.string(), key));
        }
    }
    if (manifest.views.empty()) {
        throw std::runtime_error(manifest_path.string() + ": manifest lists no view files");
    }
    return manifest;
}

MultiViewDataset load_dataset(const Manifest& manifest)
{
    std::vector<Matrix> views;
    for (const auto& path : manifest.views) {
        if (!fs::exists(path)) {
            throw std::runtime_error("view file not found: " + path.string());
        }
        Matrix m = read_csv_matrix(path, manifest.header);
        if (manifest.instances_by_features) {
            m.transposeInPlace();
        }
        if (!views.empty() && m.cols() != views.front().cols()) {
            throw std::runtime_error(fmt::format("instance count mismatch: {} has {} instances, expected {}",
                                                 path.string(), m.cols(), views.front().cols()));
        }
        views.push_back(std::move(m));
    }

    std::optional<std::vector<int>> labels;
    if (manifest.labels) {
        const auto text = io::read_file(*manifest.labels);
        std::vector<int> parsed;
        std::size_t line_no = 0;
        for (const auto& line : io::split(text, '\n')) {
            ++line_no;
            if (line.empty()) {
                continue;
            }
            int value = 0;
            const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), value);
            if (ec != std::errc() || ptr != line.data() + line.size()) {
                throw std::runtime_error(
                    fmt::format("{}:{}: invalid label '{}'", manifest.labels->string(), line_no, line));
            }
            parsed.push_back(value);
        }
        labels = std::move(parsed);
    }
    return MultiViewDataset(std::move(views), std::move(labels));
}

MultiViewDataset load_dataset(const fs::path& manifest_path)
{
    return load_dataset(read_manifest(manifest_path));
}

fs::path save_dataset(const MultiViewDataset& ds, const fs::path& dir)
{
    fs::create_directories(dir);
    std::string manifest = "orientation = features_by_instances\nheader = false\n";
    for (std::size_t v = 0; v < ds.num_views(); ++v) {
        const auto name = fmt::format("view_{}.csv", v);
        write_csv_matrix(dir / name, ds.view(v));
        manifest += fmt::format("view = {}\n", name);
    }
    if (ds.has_labels()) {
        std::string labels;
        for (const int y : ds.labels()) {
            labels += fmt::format("{}\n", y);
        }
        io::write_file_atomic(dir / "labels.csv", labels);
        manifest += "labels = labels.csv\n";
    }
    const auto path = dir / "manifest.txt";
    io::write_file_atomic(path, manifest);
    return path;
}

} // namespace coselect
