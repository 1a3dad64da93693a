#include <iostream>
#include <string>
#include <vector>

#include "mowsafe/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return mowsafe::cli::run(std::move(args), std::cout, std::cerr);
}
