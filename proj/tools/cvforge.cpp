#include "cvforge/cli.hpp"

int main(int argc, char** argv) { return cvforge::cli::cli_main(argc, argv); }
