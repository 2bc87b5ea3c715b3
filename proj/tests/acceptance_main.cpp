// Acceptance runner: one pass/fail line per criterion at full scale.
//   --only K   run a single criterion
//   --fast     reduced resolution (the CLI selftest scale)
//   --tiny     smoke scale
//   --threads N

#include <cstring>
#include <iostream>
#include <string>

#include "lrtk/acceptance.hpp"

int main(int argc, char** argv) {
  lrtk::AcceptanceOptions opt;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      opt.only = std::atoi(argv[++i]);
    } else if (arg == "--fast") {
      opt.scale = lrtk::AcceptanceScale::Reduced;
    } else if (arg == "--tiny") {
      opt.scale = lrtk::AcceptanceScale::Tiny;
    } else if (arg == "--threads" && i + 1 < argc) {
      opt.threads = std::atoi(argv[++i]);
    } else {
      std::cerr << "usage: lrt_acceptance [--only K] [--fast|--tiny] [--threads N]\n";
      return 1;
    }
  }
  const auto results = lrtk::run_acceptance(opt, std::cout);
  return lrtk::acceptance_passed(results) ? 0 : 3;
}
