#include "gridrestore/cli.hpp"

int main(int argc, char** argv) { return gridrestore::cli_main(argc, argv); }
