#include "dvae/cli/commands.hpp"

int main(int argc, char** argv) { return dvae::cli::run(argc, argv); }
