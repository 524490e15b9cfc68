#include <iostream>

#include "abhsim/cli.hpp"

int main(int argc, char** argv) {
    return abhsim::cli_dispatch(argc, argv, std::cout, std::cerr);
}
