#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return kernelsens::cli::dispatch(argc, argv, std::cout, std::cerr);
}
