#pragma once
// Command line front end over the experiment harness.  args excludes the
// program name.  Exit code 0: all checks passed; 2: a statistical check
// failed; 1: configuration, guard or convergence error.
#include <string>
#include <vector>

namespace depsim::harness {

int run_cli(const std::vector<std::string>& args);

} // namespace depsim::harness
