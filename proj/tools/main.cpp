#include "fedglb/cli.hpp"

int main(int argc, char** argv) { return fedglb::cli_main(argc, argv); }
