#include <string>
#include <vector>

#include "fade/cli.hpp"

int main(int argc, char** argv) {
  return fade::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
