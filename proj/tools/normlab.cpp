#include "normlab/cli/commands.hpp"

#include <iostream>

int main(int argc, char **argv) {
    return normlab::cli::run_cli(argc, argv, std::cout, std::cerr);
}
