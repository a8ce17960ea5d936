#include "absorb/cli.hpp"

int main(int argc, char** argv) { return absorb::cli_main(argc, argv); }
