#include <string>
#include <vector>

#include "carleman_cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return carleman::cli::run_cli(std::move(args));
}
