// SPDX-License-Identifier: Apache-2.0
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "ptl/cli.hpp"

extern char** environ;

int main(int argc, char** argv) {
  std::map<std::string, std::string> env;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    const std::string entry(*e);
    const auto eq = entry.find('=');
    if (eq != std::string::npos && entry.rfind("PTL_", 0) == 0) env.emplace(entry.substr(0, eq), entry.substr(eq + 1));
  }
  return ptl::run(std::vector<std::string>(argv, argv + argc), env, std::cout, std::cerr);
}
