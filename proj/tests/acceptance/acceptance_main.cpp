// Runs the full acceptance suite and prints one PASS/FAIL line per criterion.
// Pass --quick for reduced sample sizes. Exit status is nonzero if any fails.

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <iostream>

#include "fhn/acceptance.hpp"

int main(int argc, char** argv) {
  fhn::AcceptanceOptions opt;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--quick") == 0) opt.quick = true;
  }
  opt.scratch = std::filesystem::temp_directory_path() / "fhn_acceptance_scratch";
  std::filesystem::create_directories(opt.scratch);
  auto results = fhn::run_acceptance(opt, [](const fhn::CriterionResult& r) {
    std::printf("%s criterion %2d %-32s %6.1fs  %s\n", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(), r.seconds,
                r.summary.c_str());
    std::fflush(stdout);
  });
  int failed = 0;
  for (const auto& r : results) failed += r.passed ? 0 : 1;
  std::printf("%zu criteria, %d failed\n", results.size(), failed);
  std::filesystem::remove_all(opt.scratch);
  return failed == 0 ? 0 : 1;
}
