#include "wkbp/cli.hpp"

int main(int argc, char** argv) { return wkbp::cli_main(argc, argv); }
