// Writes a built-in layer table in the network CSV format.
#include <iostream>

#include "flexpipe/networks.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: flexpipe-netdump resnet34|mobilenet|convnext\n";
        return 2;
    }
    try {
        flexpipe::write_network(std::cout, flexpipe::builtin_network(argv[1]));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
