#include "lln/cli.hpp"

int main(int argc, char** argv) { return lln::run_cli(argc, argv); }
