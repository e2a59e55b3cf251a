#include <string>
#include <vector>

#include "anisotikh/cli.hpp"

int main(int argc, char** argv) {
  return anisotikh::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
