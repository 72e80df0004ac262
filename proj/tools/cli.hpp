#pragma once

#include <string>
#include <vector>

namespace lshm::cli {

// Runs one CLI invocation. Exit codes: 0 success, 1 usage error, 2 data
// error (unreadable/malformed files, impossible requests), 3 numeric error.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // args without argv[0]

}  // namespace lshm::cli
