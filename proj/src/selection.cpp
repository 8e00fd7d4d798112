#include "coselect/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "coselect/io.hpp"

namespace coselect {

Vector mvis_scores(const Matrix& b, std::span<const Matrix> b_views, const Vector& eta, double eps)
{
    if (!(eps > 0.0)) {
        throw std::invalid_argument("mvis_scores: eps must be > 0");
    }
    if (static_cast<std::size_t>(eta.size()) != b_views.size()) {
        throw std::invalid_argument("mvis_scores: one eta per view required");
    }
    Vector score = b.rowwise().squaredNorm();
    for (std::size_t v = 0; v < b_views.size(); ++v) {
        score.array() += eta(static_cast<Eigen::Index>(v)) / (b_views[v].rowwise().squaredNorm().array() + eps);
    }
    return score;
}

std::vector<Eigen::Index> rank_descending(const Vector& scores)
{
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(scores.size()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return scores(a) > scores(b); });
    return idx;
}

FeatureScores feature_scores(std::span<const Matrix> ws, bool per_view_normalized)
{
    FeatureScores out;
    for (std::size_t v = 0; v < ws.size(); ++v) {
        Vector s = ws[v].rowwise().norm();
        out.per_view.push_back(s);
        const double top = s.size() > 0 ? s.maxCoeff() : 0.0;
        if (per_view_normalized && top > 0.0) {
            s /= top;
        }
        for (Eigen::Index j = 0; j < s.size(); ++j) {
            out.ranking.push_back({v, j, s(j)});
        }
    }
    // pairs were generated in (view, feature) order, so a stable sort keeps that tie order
    std::stable_sort(out.ranking.begin(), out.ranking.end(),
                     [](const FeatureRef& a, const FeatureRef& b) { return a.score > b.score; });
    return out;
}

Eigen::Index selection_count(double ratio, Eigen::Index total)
{
    if (!(ratio > 0.0) || ratio > 1.0) {
        throw std::invalid_argument(fmt::format("selection ratio must lie in (0, 1], got {}", ratio));
    }
    const double raw = ratio * static_cast<double>(total);
    const auto count = static_cast<Eigen::Index>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
    return std::clamp<Eigen::Index>(count, 1, total);
}

Vector instance_scores(const ModelState& state, double eps)
{
    // the no-consensus variant keeps B at zero, so its consistent part vanishes
    return mvis_scores(state.b, state.b_views, state.weights.eta, eps);
}

SelectionResult select(const ModelState& state, double feature_ratio, double instance_ratio,
                       const SelectOptions& opts)
{
    SelectionResult res;
    res.feature_ratio = feature_ratio;
    res.instance_ratio = instance_ratio;

    res.instance_scores = instance_scores(state, opts.eps);
    res.instance_ranking = rank_descending(res.instance_scores);
    const auto m = selection_count(instance_ratio, res.instance_scores.size());
    res.selected_instances.assign(res.instance_ranking.begin(), res.instance_ranking.begin() + m);

    res.features = feature_scores(state.w, opts.per_view_normalized);
    const auto l = selection_count(feature_ratio, static_cast<Eigen::Index>(res.features.ranking.size()));
    res.selected_features.assign(state.w.size(), {});
    for (Eigen::Index i = 0; i < l; ++i) {
        const auto& f = res.features.ranking[static_cast<std::size_t>(i)];
        res.selected_features[f.view].push_back(f.feature);
    }
    return res;
}

std::string SelectionResult::to_json() const
{
    nlohmann::ordered_json j;
    j["feature_ratio"] = feature_ratio;
    j["instance_ratio"] = instance_ratio;
    j["selected_instances"] = selected_instances;
    j["selected_features"] = selected_features;
    j["instance_scores"] = std::vector<double>(instance_scores.data(), instance_scores.data() + instance_scores.size());
    auto& views = j["feature_scores"] = nlohmann::ordered_json::array();
    for (const auto& s : features.per_view) {
        views.push_back(std::vector<double>(s.data(), s.data() + s.size()));
    }
    return j.dump(2) + "\n";
}

std::string SelectionResult::instance_ranking_csv() const
{
    std::string out = "rank,instance,score,selected\n";
    for (std::size_t r = 0; r < instance_ranking.size(); ++r) {
        const auto i = instance_ranking[r];
        out += fmt::format("{},{},{},{}\n", r, i, io::format_number(instance_scores(i)),
                           r < selected_instances.size() ? 1 : 0);
    }
    return out;
}

std::string SelectionResult::feature_ranking_csv() const
{
    std::size_t selected = 0;
    for (const auto& v : selected_features) {
        selected += v.size();
    }
    std::string out = "rank,view,feature,score,selected\n";
    for (std::size_t r = 0; r < features.ranking.size(); ++r) {
        const auto& f = features.ranking[r];
        out += fmt::format("{},{},{},{},{}\n", r, f.view, f.feature, io::format_number(f.score),
                           r < selected ? 1 : 0);
    }
    return out;
}

} // namespace coselect
