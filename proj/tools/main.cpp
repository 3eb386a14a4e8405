#include "tactex/cli.hpp"

int main(int argc, char** argv) { return tactex::cli_main(argc, argv); }
