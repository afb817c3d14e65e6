#include <string>
#include <vector>

#include "depthbin/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return depthbin::run_cli(args);
}
