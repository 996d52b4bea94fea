#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace synthweave::cli {

enum ExitCode { kOk = 0, kRuntime = 1, kUsage = 2 };

/// Runs one command. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace synthweave::cli
