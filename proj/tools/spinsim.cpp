// spinsim: command-line runner for the single-moment experiments.
#include "spinsim/cli.hpp"

int main(int argc, char** argv) { return spinsim::run_cli(argc, argv); }
