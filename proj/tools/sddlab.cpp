#include "sdd/cli.hpp"

int main(int argc, char** argv) { return sdd::run_cli(argc, argv); }
