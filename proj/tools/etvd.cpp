#include "etvd/cli.hpp"

int main(int argc, char** argv) {
    return etvd::run_cli(argc, argv);
}
