#include "coselect/commands.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "coselect/io.hpp"

namespace coselect::commands {

namespace fs = std::filesystem;

namespace {

void begin(const RunConfig& cfg)
{
    fs::create_directories(cfg.out);
    fs::remove(cfg.out / "FAILED");
    io::write_file_atomic(cfg.out / "config.txt", to_config_text(cfg));
}

Hyperparams resolved_hp(const RunConfig& cfg, const MultiViewDataset& ds)
{
    Hyperparams hp = cfg.hp;
    hp.c = resolve_projection_dim(hp, ds.unlabeled(),
                                  ds.has_labels() ? std::optional<int>(ds.num_classes()) : std::nullopt);
    return hp;
}

std::vector<double> to_std(const Vector& v)
{
    return {v.data(), v.data() + v.size()};
}

std::string model_summary(const FitResult& fitted, const MultiViewDataset& ds, const Hyperparams& hp)
{
    const auto& st = fitted.state;
    const auto& last = fitted.trace.records.back();
    nlohmann::ordered_json j;
    j["variant"] = to_string(st.variant);
    j["instances"] = ds.num_instances();
    j["view_dims"] = ds.view_dims();
    j["c"] = hp.c;
    j["iterations"] = fitted.trace.records.size();
    j["converged"] = fitted.trace.converged;
    j["objective"] = {{"total", last.terms.total},
                      {"reconstruction", last.terms.reconstruction},
                      {"w_penalty", last.terms.w_penalty},
                      {"bv_penalty", last.terms.bv_penalty},
                      {"b_penalty", last.terms.b_penalty},
                      {"diversity", last.terms.diversity},
                      {"specific_graph", last.terms.specific_graph},
                      {"graph_fitting", last.terms.graph_fitting}};
    j["relative_change"] = last.relative_change;
    j["orthogonality_gap"] = last.orthogonality_gap;
    j["weights"] = {{"lambda", to_std(st.weights.lambda)},
                    {"eta", to_std(st.weights.eta)},
                    {"gamma", to_std(st.weights.gamma)}};
    std::vector<double> w_l21;
    std::vector<double> bv_l21;
    for (std::size_t v = 0; v < st.w.size(); ++v) {
        w_l21.push_back(l21_norm(st.w[v]));
        bv_l21.push_back(l21_norm(st.b_views[v]));
    }
    j["norms"] = {{"w_l21", w_l21}, {"b_views_l21", bv_l21}, {"b_l21", l21_norm(st.b)}};
    return j.dump(2) + "\n";
}

FitResult run_fit(const RunConfig& cfg, const MultiViewDataset& ds, const Hyperparams& hp)
{
    spdlog::info("fitting {} model: n={} views={} c={}", to_string(cfg.variant), ds.num_instances(),
                 ds.num_views(), hp.c);
    auto fitted = fit_variant(ds.unlabeled(), hp, cfg.variant);
    spdlog::info("finished after {} iterations (converged: {})", fitted.trace.records.size(),
                 fitted.trace.converged);
    io::write_file_atomic(cfg.out / "trace.csv", fitted.trace.to_csv());
    io::write_file_atomic(cfg.out / "model_summary.json", model_summary(fitted, ds, hp));
    return fitted;
}

} // namespace

void mark_failed(const fs::path& out, const std::string& message)
{
    try {
        io::write_file_atomic(out / "FAILED", message + "\n");
    } catch (const std::exception&) {
        // output directory itself is unusable; the caller reports the error
    }
}

void cmd_synth(const RunConfig& cfg)
{
    begin(cfg);
    const auto ds = synthesize(cfg.synth);
    const auto manifest = save_dataset(ds, cfg.out);
    spdlog::info("wrote {}", manifest.string());
}

void cmd_fit(const RunConfig& cfg)
{
    begin(cfg);
    const auto ds = load_data(cfg);
    run_fit(cfg, ds, resolved_hp(cfg, ds));
}

void cmd_select(const RunConfig& cfg)
{
    begin(cfg);
    const auto ds = load_data(cfg);
    const auto hp = resolved_hp(cfg, ds);
    const auto fitted = run_fit(cfg, ds, hp);
    const auto sel = select(fitted.state, cfg.feature_ratio, cfg.instance_ratio,
                            {.eps = hp.epsilon, .per_view_normalized = cfg.per_view_normalized});
    io::write_file_atomic(cfg.out / "selection.json", sel.to_json());
    io::write_file_atomic(cfg.out / "instance_ranking.csv", sel.instance_ranking_csv());
    io::write_file_atomic(cfg.out / "feature_ranking.csv", sel.feature_ranking_csv());
}

void cmd_eval(const RunConfig& cfg)
{
    begin(cfg);
    const auto ds = load_data(cfg);
    if (!ds.has_labels()) {
        throw std::invalid_argument("eval needs labels; add 'labels = ...' to the manifest");
    }
    const auto hp = resolved_hp(cfg, ds);
    const auto fitted = run_fit(cfg, ds, hp);
    const auto sel = select(fitted.state, cfg.feature_ratio, cfg.instance_ratio,
                            {.eps = hp.epsilon, .per_view_normalized = cfg.per_view_normalized});
    const auto report = evaluate(ds, sel, cfg.classifier, hp.seed);
    io::write_file_atomic(cfg.out / "selection.json", sel.to_json());
    io::write_file_atomic(cfg.out / "eval.json", report.to_json());

    SweepTable table;
    table.rows.push_back({.feature_ratio = cfg.feature_ratio,
                          .instance_ratio = cfg.instance_ratio,
                          .acc = report.acc(),
                          .f1 = report.f1(),
                          .repeats = 1,
                          .seed = hp.seed,
                          .acc_runs = {report.acc()},
                          .f1_runs = {report.f1()}});
    io::write_file_atomic(cfg.out / "eval.csv", table.to_csv());
}

void cmd_sweep(const RunConfig& cfg)
{
    begin(cfg);
    const auto ds = load_data(cfg);
    SweepOptions opts;
    opts.feature_ratios = cfg.feature_ratios;
    opts.instance_ratios = cfg.instance_ratios;
    opts.repeats = cfg.repeats;
    opts.classifier = cfg.classifier;
    opts.variant = cfg.variant;
    opts.jobs = cfg.jobs;
    const auto table = ratio_sweep(ds, cfg.hp, opts);
    io::write_file_atomic(cfg.out / "sweep.csv", table.to_csv());
    io::write_file_atomic(cfg.out / "sweep.json", table.to_json());
}

void cmd_ablate(const RunConfig& cfg)
{
    begin(cfg);
    const auto ds = load_data(cfg);
    const auto table = ablate(ds, cfg.hp, cfg.feature_ratio, cfg.instance_ratio, cfg.repeats, cfg.classifier,
                              cfg.dataset_name, cfg.jobs);
    io::write_file_atomic(cfg.out / "ablation.csv", table.to_csv());
}

} // namespace coselect::commands
