#pragma once

#include <string>
#include <vector>

namespace mufide::cli {

// Full command dispatch, callable in-process for testing. args excludes the
// program name. Exit codes: 0 success, 2 usage error, 3 data error,
// 4 numerical failure. Diagnostics go to stderr, results to stdout.
int run(std::vector<std::string> args);

}  // namespace mufide::cli
