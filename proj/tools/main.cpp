#include "nsk/cli.hpp"

int main(int argc, char** argv) { return nsk::cli_main(argc, argv); }
