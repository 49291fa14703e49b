#include "norm/cli/cli.hpp"

int main(int argc, char** argv) { return norm::cli::run(argc, argv); }
