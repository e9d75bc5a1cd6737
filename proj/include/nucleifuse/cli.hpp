#pragma once

#include <string>
#include <vector>

namespace nucleifuse::cli {

// Runs one `nucleifuse` command line (args[0] is the program name) and
// returns the process exit code: 0 ok, 2 input error, 3 numeric failure,
// 4 missing dependency.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

// Worker count for parallel stages, capped by NUCLEIFUSE_THREADS.
unsigned worker_threads();

}  // namespace nucleifuse::cli
