#include <string>
#include <vector>

#include "cli.h"

int main(int argc, char** argv) {
  return wvsc::cli::run_command(std::vector<std::string>(argv, argv + argc));
}
