#include "craft/cli.hpp"

int main(int argc, char** argv) { return craft::cli::cli_main(argc, argv); }
