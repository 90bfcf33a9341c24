#include <vector>

#include "sdot/cli.hpp"

int main(int argc, char** argv) {
    return sdot::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
