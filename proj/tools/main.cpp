#include "lrmdl/cli.hpp"

int main(int argc, char** argv) { return lrmdl::cli_main(argc, argv); }
