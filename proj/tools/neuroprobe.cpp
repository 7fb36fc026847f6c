#include <string>
#include <vector>

#include "neuroprobe/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return neuroprobe::cli::run(args);
}
