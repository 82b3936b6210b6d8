#include "fpca/cli.hpp"

int main(int argc, char** argv) { return fpca::run_cli(argc, argv); }
