#include <string>
#include <vector>

#include "reglue/cli.hpp"

int main(int argc, char** argv) { return reglue::cli::main(std::vector<std::string>(argv + 1, argv + argc)); }
