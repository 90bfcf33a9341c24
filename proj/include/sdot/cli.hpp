#pragma once

#include <string>
#include <vector>

namespace sdot::cli {

/// Command dispatch used by the sdot binary and by the tests. Exit codes:
/// 0 success, 1 check failure, 2 input error, 3 solver non-convergence.
int run(const std::vector<std::string>& args);

} // namespace sdot::cli
