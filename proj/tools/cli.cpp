#include "cli.hpp"

#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "coselect/commands.hpp"

namespace coselect::cli {

namespace {

struct Overrides {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::optional<std::string> variant;
    std::optional<double> feature_ratio;
    std::optional<double> instance_ratio;
    std::optional<std::string> classifier;
};

void setup_logging()
{
    static const bool once = [] {
        auto logger = spdlog::stderr_color_mt("coselect");
        spdlog::set_default_logger(logger);
        return true;
    }();
    (void)once;
    auto level = spdlog::level::warn;
    if (const char* env = std::getenv("COSELECT_LOG"); env != nullptr && *env != '\0') {
        level = spdlog::level::from_str(env);
    }
    spdlog::set_level(level);
}

RunConfig resolve(const Overrides& o)
{
    RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
    io::KeyValues kv;
    if (o.out) {
        kv.emplace_back("out", *o.out);
    }
    if (o.seed) {
        kv.emplace_back("seed", std::to_string(*o.seed));
    }
    if (o.jobs) {
        kv.emplace_back("jobs", std::to_string(*o.jobs));
    }
    if (o.variant) {
        kv.emplace_back("variant", *o.variant);
    }
    if (o.feature_ratio) {
        kv.emplace_back("feature_ratio", fmt::format("{}", *o.feature_ratio));
    }
    if (o.instance_ratio) {
        kv.emplace_back("instance_ratio", fmt::format("{}", *o.instance_ratio));
    }
    if (o.classifier) {
        kv.emplace_back("classifier", *o.classifier);
    }
    return apply_config(std::move(cfg), kv);
}

} // namespace

int run(const std::vector<std::string>& args)
{
    setup_logging();

    CLI::App app{"Joint feature and instance selection for multi-view unlabeled data", "coselect"};
    app.require_subcommand(1);

    Overrides o;
    using Command = std::function<void(const RunConfig&)>;
    const std::map<std::string, std::pair<std::string, Command>> table{
        {"synth", {"Generate a labelled synthetic multi-view dataset", commands::cmd_synth}},
        {"fit", {"Fit the model; write trace and model summary", commands::cmd_fit}},
        {"select", {"Fit, then rank and select features and instances", commands::cmd_select}},
        {"eval", {"Fit, select and score a classifier on the unselected instances", commands::cmd_eval}},
        {"sweep", {"Evaluate a grid of feature/instance ratios", commands::cmd_sweep}},
        {"ablate", {"Compare the full model with its two ablations", commands::cmd_ablate}},
    };
    std::string chosen;
    for (const auto& [name, entry] : table) {
        auto* sub = app.add_subcommand(name, entry.first);
        sub->add_option("--config", o.config, "key = value run configuration")->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--seed", o.seed, "solver seed");
        sub->add_option("--jobs", o.jobs, "parallel fits for sweep/ablate")->check(CLI::PositiveNumber);
        sub->add_option("--variant", o.variant, "full | no-graph | no-consensus");
        sub->add_option("--feature-ratio", o.feature_ratio, "fraction of features to select");
        sub->add_option("--instance-ratio", o.instance_ratio, "fraction of instances to select");
        sub->add_option("--classifier", o.classifier, "one-nn | nearest-centroid");
        sub->callback([&chosen, name = name] { chosen = name; });
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    RunConfig cfg;
    try {
        cfg = resolve(o);
    } catch (const std::exception& e) {
        std::cerr << "coselect " << chosen << ": " << e.what() << "\n";
        return 2;
    }
    try {
        table.at(chosen).second(cfg);
    } catch (const std::exception& e) {
        std::cerr << "coselect " << chosen << ": " << e.what() << "\n";
        commands::mark_failed(cfg.out, e.what());
        return 1;
    }
    return 0;
}

} // namespace coselect::cli
