#pragma once

namespace norm::cli {

// Entry point of the `norm` executable. Returns the process exit code:
// 0 success, 1 runtime or verification failure, 2 usage error.
int run(int argc, char** argv);

}  // namespace norm::cli
