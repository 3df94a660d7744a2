#include "potts/cli.hpp"

int main(int argc, char** argv) { return potts::run_cli(argc, argv); }
