#include <iostream>

#include <spdlog/spdlog.h>

#include "cli.hpp"

int main(int argc, char** argv) {
    spdlog::set_pattern("[%l] %v");
    std::vector<std::string> args(argv + 1, argv + argc);
    return citelens::cli::run(args, std::cout, std::cerr);
}
