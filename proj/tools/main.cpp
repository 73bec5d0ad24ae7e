#include <iostream>
#include <string>
#include <vector>

#include "classilist/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return classilist::cli::run(args, std::cout, std::cerr);
}
