#include <iostream>
#include <string>
#include <vector>

#include "homethru/cli/cli.hpp"

int main(int argc, char** argv) {
    homethru::cli::install_signal_handlers();
    const std::vector<std::string> args(argv + 1, argv + argc);
    return homethru::cli::run_cli(args, std::cout, std::cerr);
}
