#pragma once

// kdv-spinn command line: train, ablation, oracle, report and check.
// Exit codes: 0 success, 1 failed run or check, 2 bad configuration.

#include <ostream>
#include <string>
#include <vector>

namespace kdv::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Keeps large freed blocks in the heap (glibc). Every loss evaluation
/// allocates and frees the same tape buffers; returning them to the OS each
/// time costs about a third of the run time.
void tune_allocator();

int main(int argc, char** argv);

}  // namespace kdv::cli
