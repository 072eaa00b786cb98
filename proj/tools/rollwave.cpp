#include "rollwave/cli.hpp"

int main(int argc, char** argv) { return rollwave::cli::run(argc, argv); }
