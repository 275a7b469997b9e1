#include <cstdio>
#include <cstdlib>
#include <string>

#include "cclab/acceptance.hpp"

// Prints one line per criterion; exit status 1 when any fails.
int main(int argc, char** argv) {
  cclab::AcceptanceOptions o;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--seed" && i + 1 < argc) o.seed = std::strtoull(argv[++i], nullptr, 10);
    else o.only.push_back(std::atoi(argv[i]));
  }
  int failed = 0;
  cclab::run_acceptance(o, [&](const cclab::CriterionResult& r) {
    std::printf("%s\n", r.line().c_str());
    std::fflush(stdout);
    failed += r.pass ? 0 : 1;
  });
  std::printf("%s\n", failed == 0 ? "all criteria passed" : (std::to_string(failed) + " criteria failed").c_str());
  return failed == 0 ? 0 : 1;
}
