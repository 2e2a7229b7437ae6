#include <string>
#include <vector>

#include "mufide/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mufide::cli::run(std::move(args));
}
