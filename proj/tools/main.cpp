#include "depsim/harness/cli.hpp"

int main(int argc, char** argv) {
  return depsim::harness::run_cli({argv + 1, argv + argc});
}
