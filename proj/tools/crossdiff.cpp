#include "crossdiff/cli/commands.hpp"

int main(int argc, char** argv) { return crossdiff::cli::main_entry(argc, argv); }
