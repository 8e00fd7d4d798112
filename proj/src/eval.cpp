#include "coselect/eval.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <limits>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "coselect/io.hpp"

namespace coselect {

Classifier parse_classifier(const std::string& name)
{
    if (name == "one-nn" || name == "1nn") {
        return Classifier::OneNN;
    }
    if (name == "nearest-centroid") {
        return Classifier::NearestCentroid;
    }
    throw std::invalid_argument("unknown classifier: " + name);
}

std::string to_string(Classifier c)
{
    return c == Classifier::OneNN ? "one-nn" : "nearest-centroid";
}

Metrics compute_metrics(std::span<const int> truth, std::span<const int> predicted)
{
    if (truth.size() != predicted.size()) {
        throw std::invalid_argument("compute_metrics: truth and predictions differ in length");
    }
    if (truth.empty()) {
        throw std::invalid_argument("compute_metrics: nothing to score");
    }
    std::set<int> classes(truth.begin(), truth.end());
    classes.insert(predicted.begin(), predicted.end());

    Metrics m;
    std::size_t correct = 0;
    std::map<int, int> tp;
    std::map<int, int> pred_count;
    std::map<int, int> true_count;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ++true_count[truth[i]];
        ++pred_count[predicted[i]];
        if (truth[i] == predicted[i]) {
            ++correct;
            ++tp[truth[i]];
        }
    }
    m.acc = static_cast<double>(correct) / static_cast<double>(truth.size());

    double f1_sum = 0.0;
    for (const int c : classes) {
        ClassStats s;
        s.support = true_count[c];
        s.precision = pred_count[c] > 0 ? static_cast<double>(tp[c]) / pred_count[c] : 0.0;
        s.recall = true_count[c] > 0 ? static_cast<double>(tp[c]) / true_count[c] : 0.0;
        s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
        f1_sum += s.f1;
        m.per_class[c] = s;
    }
    m.f1 = f1_sum / static_cast<double>(classes.size());
    return m;
}

std::string EvalReport::to_json() const
{
    nlohmann::ordered_json j;
    j["acc"] = metrics.acc;
    j["f1"] = metrics.f1;
    j["evaluated"] = evaluated;
    j["feature_ratio"] = feature_ratio;
    j["instance_ratio"] = instance_ratio;
    j["classifier"] = to_string(classifier);
    j["seed"] = seed;
    j["classes_missing_from_training"] = classes_missing_from_training;
    auto& pc = j["per_class"] = nlohmann::ordered_json::object();
    for (const auto& [c, s] : metrics.per_class) {
        pc[std::to_string(c)] = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1},
                                 {"support", s.support}};
    }
    return j.dump(2) + "\n";
}

Matrix selected_representation(const MultiViewDataset& ds, const SelectionResult& sel)
{
    if (sel.selected_features.size() != ds.num_views()) {
        throw std::invalid_argument("selection and dataset disagree on the number of views");
    }
    Eigen::Index rows = 0;
    for (const auto& f : sel.selected_features) {
        rows += static_cast<Eigen::Index>(f.size());
    }
    Matrix z(rows, ds.num_instances());
    Eigen::Index r = 0;
    for (std::size_t v = 0; v < ds.num_views(); ++v) {
        for (const auto f : sel.selected_features[v]) {
            z.row(r++) = ds.view(v).row(f);
        }
    }
    return z;
}

std::vector<int> classify(const Matrix& train, std::span<const int> train_labels, const Matrix& query,
                          Classifier classifier)
{
    if (train.cols() != static_cast<Eigen::Index>(train_labels.size()) || train.cols() == 0) {
        throw std::invalid_argument("classify: need one label per (non-empty) training column");
    }
    Matrix refs = train;
    std::vector<int> ref_labels(train_labels.begin(), train_labels.end());
    if (classifier == Classifier::NearestCentroid) {
        const std::set<int> classes(train_labels.begin(), train_labels.end());
        refs = Matrix::Zero(train.rows(), static_cast<Eigen::Index>(classes.size()));
        ref_labels.assign(classes.begin(), classes.end());
        for (std::size_t c = 0; c < ref_labels.size(); ++c) {
            int count = 0;
            for (Eigen::Index j = 0; j < train.cols(); ++j) {
                if (train_labels[static_cast<std::size_t>(j)] == ref_labels[c]) {
                    refs.col(static_cast<Eigen::Index>(c)) += train.col(j);
                    ++count;
                }
            }
            refs.col(static_cast<Eigen::Index>(c)) /= count;
        }
    }
    std::vector<int> out(static_cast<std::size_t>(query.cols()));
    for (Eigen::Index q = 0; q < query.cols(); ++q) {
        Eigen::Index best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < refs.cols(); ++j) {
            const double d = (refs.col(j) - query.col(q)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        out[static_cast<std::size_t>(q)] = ref_labels[static_cast<std::size_t>(best)];
    }
    return out;
}

EvalReport evaluate(const MultiViewDataset& ds, const SelectionResult& sel, Classifier classifier,
                    std::uint64_t seed)
{
    if (!ds.has_labels()) {
        throw std::invalid_argument("evaluate: dataset has no labels");
    }
    if (sel.selected_instances.empty()) {
        throw std::invalid_argument("evaluate: selection is empty");
    }
    const auto n = ds.num_instances();
    std::vector<bool> chosen(static_cast<std::size_t>(n), false);
    for (const auto i : sel.selected_instances) {
        chosen.at(static_cast<std::size_t>(i)) = true;
    }
    std::vector<Eigen::Index> held_out;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!chosen[static_cast<std::size_t>(i)]) {
            held_out.push_back(i);
        }
    }
    if (held_out.empty()) {
        throw std::invalid_argument("evaluate: every instance was selected; nothing left to predict");
    }

    const Matrix z = selected_representation(ds, sel);
    const auto& labels = ds.labels();
    Matrix train(z.rows(), static_cast<Eigen::Index>(sel.selected_instances.size()));
    std::vector<int> train_labels;
    for (std::size_t j = 0; j < sel.selected_instances.size(); ++j) {
        train.col(static_cast<Eigen::Index>(j)) = z.col(sel.selected_instances[j]);
        train_labels.push_back(labels[static_cast<std::size_t>(sel.selected_instances[j])]);
    }
    Matrix query(z.rows(), static_cast<Eigen::Index>(held_out.size()));
    std::vector<int> truth;
    for (std::size_t j = 0; j < held_out.size(); ++j) {
        query.col(static_cast<Eigen::Index>(j)) = z.col(held_out[j]);
        truth.push_back(labels[static_cast<std::size_t>(held_out[j])]);
    }

    EvalReport report;
    const std::set<int> seen(train_labels.begin(), train_labels.end());
    for (const int c : std::set<int>(truth.begin(), truth.end())) {
        if (!seen.contains(c)) {
            report.classes_missing_from_training.push_back(c);
            spdlog::warn("class {} has no selected training instance; its recall will be 0", c);
        }
    }
    const auto predicted = classify(train, train_labels, query, classifier);
    report.metrics = compute_metrics(truth, predicted);
    report.evaluated = held_out.size();
    report.feature_ratio = sel.feature_ratio;
    report.instance_ratio = sel.instance_ratio;
    report.classifier = classifier;
    report.seed = seed;
    return report;
}

namespace {

template <class Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn)
{
    const auto workers = std::max<std::size_t>(1, std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs))));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (auto i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    const std::lock_guard lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

Hyperparams with_label_defaults(const MultiViewDataset& ds, Hyperparams hp)
{
    hp.c = resolve_projection_dim(hp, ds.unlabeled(), ds.num_classes());
    return hp;
}

} // namespace

SweepTable ratio_sweep(const MultiViewDataset& ds, const Hyperparams& hp_in, const SweepOptions& opts)
{
    if (opts.repeats < 1) {
        throw std::invalid_argument("ratio_sweep: repeats must be >= 1");
    }
    if (opts.feature_ratios.empty() || opts.instance_ratios.empty()) {
        throw std::invalid_argument("ratio_sweep: empty ratio grid");
    }
    const Hyperparams hp = with_label_defaults(ds, hp_in);
    const auto nf = opts.feature_ratios.size();
    const auto ni = opts.instance_ratios.size();
    const auto reps = static_cast<std::size_t>(opts.repeats);

    // results[rep][cell]
    std::vector<std::vector<EvalReport>> results(reps);
    parallel_for(reps, opts.jobs, [&](std::size_t rep) {
        Hyperparams run = hp;
        run.seed = hp.seed + rep;
        const auto fitted = fit_variant(ds.unlabeled(), run, opts.variant);
        auto& out = results[rep];
        for (std::size_t a = 0; a < nf; ++a) {
            for (std::size_t b = 0; b < ni; ++b) {
                const auto sel = select(fitted.state, opts.feature_ratios[a], opts.instance_ratios[b],
                                        {.eps = hp.epsilon});
                out.push_back(evaluate(ds, sel, opts.classifier, run.seed));
            }
        }
    });

    SweepTable table;
    for (std::size_t a = 0; a < nf; ++a) {
        for (std::size_t b = 0; b < ni; ++b) {
            SweepRow row;
            row.feature_ratio = opts.feature_ratios[a];
            row.instance_ratio = opts.instance_ratios[b];
            row.repeats = opts.repeats;
            row.seed = hp.seed;
            for (std::size_t rep = 0; rep < reps; ++rep) {
                const auto& r = results[rep][a * ni + b];
                row.acc_runs.push_back(r.acc());
                row.f1_runs.push_back(r.f1());
            }
            for (std::size_t rep = 0; rep < reps; ++rep) {
                row.acc += row.acc_runs[rep];
                row.f1 += row.f1_runs[rep];
            }
            row.acc /= static_cast<double>(reps);
            row.f1 /= static_cast<double>(reps);
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

std::string SweepTable::to_csv() const
{
    std::string out = "feature_ratio,instance_ratio,acc,f1,repeats,seed\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{},{},{},{},{}\n", io::format_number(r.feature_ratio),
                           io::format_number(r.instance_ratio), io::format_number(r.acc), io::format_number(r.f1),
                           r.repeats, r.seed);
    }
    return out;
}

std::string SweepTable::to_json() const
{
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        arr.push_back(nlohmann::ordered_json{{"feature_ratio", r.feature_ratio},
                                             {"instance_ratio", r.instance_ratio},
                                             {"acc", r.acc},
                                             {"f1", r.f1},
                                             {"repeats", r.repeats},
                                             {"seed", r.seed},
                                             {"acc_runs", r.acc_runs},
                                             {"f1_runs", r.f1_runs}});
    }
    return arr.dump(2) + "\n";
}

std::string AblationTable::to_csv() const
{
    std::string out = fmt::format("metric,method,{}\n", dataset);
    for (const auto& r : rows) {
        out += fmt::format("{},{},{}\n", r.metric, to_string(r.variant), io::format_number(r.value));
    }
    return out;
}

double AblationTable::value(const std::string& metric, Variant v) const
{
    for (const auto& r : rows) {
        if (r.metric == metric && r.variant == v) {
            return r.value;
        }
    }
    throw std::out_of_range("ablation table has no row " + metric + "/" + to_string(v));
}

AblationTable ablate(const MultiViewDataset& ds, const Hyperparams& hp, double feature_ratio, double instance_ratio,
                     int repeats, Classifier classifier, const std::string& dataset_name, int jobs)
{
    AblationTable table;
    table.dataset = dataset_name;
    constexpr Variant variants[] = {Variant::Full, Variant::NoGraph, Variant::NoConsensus};
    std::vector<SweepRow> per_variant;
    for (const auto v : variants) {
        SweepOptions opts;
        opts.feature_ratios = {feature_ratio};
        opts.instance_ratios = {instance_ratio};
        opts.repeats = repeats;
        opts.classifier = classifier;
        opts.variant = v;
        opts.jobs = jobs;
        per_variant.push_back(ratio_sweep(ds, hp, opts).rows.front());
    }
    for (std::size_t i = 0; i < 3; ++i) {
        table.rows.push_back({"acc", variants[i], per_variant[i].acc});
    }
    for (std::size_t i = 0; i < 3; ++i) {
        table.rows.push_back({"f1", variants[i], per_variant[i].f1});
    }
    return table;
}

} // namespace coselect
