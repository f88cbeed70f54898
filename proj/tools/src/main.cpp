#include <iostream>
#include <string>
#include <vector>

#include "qcomp/pipeline.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return qcomp::pipeline::run_cli(args, std::cout, std::cerr);
}
