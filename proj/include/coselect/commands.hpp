#pragma once

#include <filesystem>

#include "coselect/config.hpp"

namespace coselect::commands {

// Each command writes its artifacts plus config.txt (the replayable echo)
// into cfg.out. Output files are written atomically.

void cmd_synth(const RunConfig& cfg);
void cmd_fit(const RunConfig& cfg);
void cmd_select(const RunConfig& cfg);
void cmd_eval(const RunConfig& cfg);
void cmd_sweep(const RunConfig& cfg);
void cmd_ablate(const RunConfig& cfg);

/// Drops a FAILED marker with the diagnostic into cfg.out so any partial
/// outputs are flagged.
void mark_failed(const std::filesystem::path& out, const std::string& message);

} // namespace coselect::commands
