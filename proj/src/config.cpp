#include "coselect/config.hpp"

#include <charconv>
#include <stdexcept>

#include <fmt/format.h>

namespace coselect {

namespace fs = std::filesystem;

namespace {

template <class T>
T parse_number(const std::string& key, const std::string& value)
{
    T out{};
    const auto* first = value.data();
    const auto* last = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (value.empty() || ec != std::errc() || ptr != last) {
        throw std::invalid_argument(fmt::format("config key '{}': cannot parse '{}'", key, value));
    }
    return out;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& value)
{
    std::vector<T> out;
    for (const auto& item : io::split(value, ',')) {
        out.push_back(parse_number<T>(key, item));
    }
    return out;
}

bool parse_flag(const std::string& key, const std::string& value)
{
    if (value == "true" || value == "1") {
        return true;
    }
    if (value == "false" || value == "0") {
        return false;
    }
    throw std::invalid_argument(fmt::format("config key '{}' expects true/false", key));
}

template <class T>
std::string join(const std::vector<T>& xs)
{
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out += (i ? "," : "") + fmt::format("{}", xs[i]);
    }
    return out;
}

} // namespace

RunConfig apply_config(RunConfig cfg, const io::KeyValues& kv, const fs::path& base_dir)
{
    for (const auto& [key, value] : kv) {
        if (key == "manifest") {
            const fs::path p(value);
            cfg.manifest = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
        } else if (key == "dataset_name") {
            cfg.dataset_name = value;
        } else if (key == "normalize") {
            cfg.normalize = parse_normalization(value);
        } else if (key == "synth.n") {
            cfg.synth.n = parse_number<Eigen::Index>(key, value);
        } else if (key == "synth.view_dims") {
            cfg.synth.view_dims = parse_list<Eigen::Index>(key, value);
        } else if (key == "synth.classes") {
            cfg.synth.classes = parse_number<int>(key, value);
        } else if (key == "synth.noise") {
            cfg.synth.noise = parse_number<double>(key, value);
        } else if (key == "synth.seed") {
            cfg.synth.seed = parse_number<std::uint64_t>(key, value);
        } else if (key == "r") {
            cfg.hp.r = parse_number<double>(key, value);
        } else if (key == "theta") {
            cfg.hp.theta = parse_number<double>(key, value);
        } else if (key == "alpha") {
            cfg.hp.alpha = parse_number<double>(key, value);
        } else if (key == "c") {
            cfg.hp.c = parse_number<int>(key, value);
        } else if (key == "k") {
            cfg.hp.k = parse_number<int>(key, value);
        } else if (key == "epsilon") {
            cfg.hp.epsilon = parse_number<double>(key, value);
        } else if (key == "tol") {
            cfg.hp.tol = parse_number<double>(key, value);
        } else if (key == "max_iter") {
            cfg.hp.max_iter = parse_number<int>(key, value);
        } else if (key == "seed") {
            cfg.hp.seed = parse_number<std::uint64_t>(key, value);
        } else if (key == "consensus_weighting") {
            if (value == "uniform") {
                cfg.hp.consensus_weighting = ConsensusWeighting::Uniform;
            } else if (value == "gamma") {
                cfg.hp.consensus_weighting = ConsensusWeighting::GammaWeighted;
            } else {
                throw std::invalid_argument("config key 'consensus_weighting' expects uniform or gamma");
            }
        } else if (key == "w_step") {
            if (value == "closed-form") {
                cfg.hp.w_step = WStep::ClosedForm;
            } else if (value == "guarded") {
                cfg.hp.w_step = WStep::Guarded;
            } else {
                throw std::invalid_argument("config key 'w_step' expects closed-form or guarded");
            }
        } else if (key == "inner_sweeps") {
            cfg.hp.inner_sweeps = parse_number<int>(key, value);
        } else if (key == "extrapolate") {
            cfg.hp.extrapolate = parse_flag(key, value);
        } else if (key == "variant") {
            cfg.variant = parse_variant(value);
        } else if (key == "feature_ratio") {
            cfg.feature_ratio = parse_number<double>(key, value);
        } else if (key == "instance_ratio") {
            cfg.instance_ratio = parse_number<double>(key, value);
        } else if (key == "feature_ratios") {
            cfg.feature_ratios = parse_list<double>(key, value);
        } else if (key == "instance_ratios") {
            cfg.instance_ratios = parse_list<double>(key, value);
        } else if (key == "classifier") {
            cfg.classifier = parse_classifier(value);
        } else if (key == "per_view_normalized") {
            cfg.per_view_normalized = parse_flag(key, value);
        } else if (key == "repeats") {
            cfg.repeats = parse_number<int>(key, value);
        } else if (key == "jobs") {
            cfg.jobs = parse_number<int>(key, value);
        } else if (key == "out") {
            cfg.out = value;
        } else {
            throw std::invalid_argument(fmt::format("unknown config key '{}'", key));
        }
    }
    return cfg;
}

RunConfig load_config(const fs::path& path)
{
    const auto text = [&] {
        try {
            return io::read_file(path);
        } catch (const std::exception&) {
            throw std::runtime_error("cannot read config file: " + path.string());
        }
    }();
    return apply_config(RunConfig{}, io::parse_key_values(text, path.string()), path.parent_path());
}

std::string to_config_text(const RunConfig& cfg)
{
    std::string out;
    auto put = [&](std::string_view key, const std::string& value) { out += fmt::format("{} = {}\n", key, value); };
    if (cfg.manifest) {
        put("manifest", fs::absolute(*cfg.manifest).lexically_normal().string());
    } else {
        put("synth.n", fmt::format("{}", cfg.synth.n));
        put("synth.view_dims", join(cfg.synth.view_dims));
        put("synth.classes", fmt::format("{}", cfg.synth.classes));
        put("synth.noise", fmt::format("{}", cfg.synth.noise));
        put("synth.seed", fmt::format("{}", cfg.synth.seed));
    }
    put("dataset_name", cfg.dataset_name);
    put("normalize", to_string(cfg.normalize));
    put("r", fmt::format("{}", cfg.hp.r));
    put("theta", fmt::format("{}", cfg.hp.theta));
    put("alpha", fmt::format("{}", cfg.hp.alpha));
    put("c", fmt::format("{}", cfg.hp.c));
    put("k", fmt::format("{}", cfg.hp.k));
    put("epsilon", fmt::format("{}", cfg.hp.epsilon));
    put("tol", fmt::format("{}", cfg.hp.tol));
    put("max_iter", fmt::format("{}", cfg.hp.max_iter));
    put("seed", fmt::format("{}", cfg.hp.seed));
    put("consensus_weighting", cfg.hp.consensus_weighting == ConsensusWeighting::Uniform ? "uniform" : "gamma");
    put("w_step", cfg.hp.w_step == WStep::ClosedForm ? "closed-form" : "guarded");
    put("inner_sweeps", fmt::format("{}", cfg.hp.inner_sweeps));
    put("extrapolate", cfg.hp.extrapolate ? "true" : "false");
    put("variant", to_string(cfg.variant));
    put("feature_ratio", fmt::format("{}", cfg.feature_ratio));
    put("instance_ratio", fmt::format("{}", cfg.instance_ratio));
    put("feature_ratios", join(cfg.feature_ratios));
    put("instance_ratios", join(cfg.instance_ratios));
    put("classifier", to_string(cfg.classifier));
    put("per_view_normalized", cfg.per_view_normalized ? "true" : "false");
    put("repeats", fmt::format("{}", cfg.repeats));
    put("jobs", fmt::format("{}", cfg.jobs));
    return out;
}

MultiViewDataset load_data(const RunConfig& cfg)
{
    const auto raw = cfg.manifest ? load_dataset(*cfg.manifest) : synthesize(cfg.synth);
    return normalize_views(raw, cfg.normalize);
}

} // namespace coselect
