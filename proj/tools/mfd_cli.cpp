#include "mfd/cli.hpp"

int main(int argc, char** argv) {
    return mfd::run_cli(argc, argv);
}
