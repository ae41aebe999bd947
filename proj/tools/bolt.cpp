#include "bolt/cli.hpp"

int main(int argc, char** argv) { return bolt::cli_main(argc, argv); }
