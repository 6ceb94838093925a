#include <iostream>

#include "coldsan/commands.hpp"

int main(int argc, char** argv) {
    return coldsan::run_cli(argc, argv, std::cout, std::cerr);
}
