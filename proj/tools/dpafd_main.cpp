#include <iostream>

#include "dpafd/cli.hpp"

int main(int argc, char** argv) {
    return dpafd::cli::main(argc, argv, std::cout, std::cerr);
}
