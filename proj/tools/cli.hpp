#pragma once

#include <string>
#include <vector>

namespace coselect::cli {

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Returns the process exit code.
int run(const std::vector<std::string>& args);

} // namespace coselect::cli
