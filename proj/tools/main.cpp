#include <iostream>
#include <string>
#include <vector>

#include "veriflow/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return veriflow::cli::run(args, std::cout, std::cerr);
}
