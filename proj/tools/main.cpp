#include "artrd/cli.hpp"

int main(int argc, char** argv) { return artrd::cli::run_cli(argc, argv); }
