#include "hybasis_cli/cli.hpp"

int main(int argc, char** argv) { return hybasis::cli::run(argc, argv); }
