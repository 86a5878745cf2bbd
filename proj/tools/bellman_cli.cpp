#include "bellman/cli.hpp"

int main(int argc, char** argv) { return bellman::cli::run(argc, argv); }
