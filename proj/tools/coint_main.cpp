#include "coint/cli.hpp"

int main(int argc, char** argv) { return coint::cli_main(argc, argv); }
