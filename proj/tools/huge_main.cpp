#include <string>
#include <vector>

#include "huge/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return huge::cli::run(args);
}
