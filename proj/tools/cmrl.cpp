#include "cmrl/cli.hpp"

int main(int argc, char** argv) { return cmrl::run_cli(argc, argv); }
