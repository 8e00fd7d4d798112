#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "coselect/dataset.hpp"
#include "coselect/eval.hpp"
#include "coselect/io.hpp"
#include "coselect/solver.hpp"

namespace coselect {

/// Everything a CLI run needs. Serialises to the same key = value format it
/// is parsed from, so an echoed config replays the run.
struct RunConfig {
    std::optional<std::filesystem::path> manifest;
    SynthesisSpec synth;
    Normalization normalize = Normalization::ZScorePerFeature;
    std::string dataset_name = "synthetic";

    Hyperparams hp;
    Variant variant = Variant::Full;
    double feature_ratio = 0.3;
    double instance_ratio = 0.2;
    std::vector<double> feature_ratios{0.1, 0.2, 0.3, 0.4, 0.5};
    std::vector<double> instance_ratios{0.1, 0.2, 0.3, 0.4, 0.5};
    Classifier classifier = Classifier::OneNN;
    bool per_view_normalized = false;
    int repeats = 1;
    int jobs = 1;
    std::filesystem::path out = "coselect-out";
};

/// Applies key = value pairs on top of `base`. Relative manifest paths resolve
/// against `base_dir`.
RunConfig apply_config(RunConfig base, const io::KeyValues& kv, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
std::string to_config_text(const RunConfig& cfg);

/// Loads or synthesises the dataset and applies the configured normalisation.
MultiViewDataset load_data(const RunConfig& cfg);

} // namespace coselect
