#include "dialectic/cli.hpp"

int main(int argc, char** argv) { return dialectic::cli::route(argc, argv); }
