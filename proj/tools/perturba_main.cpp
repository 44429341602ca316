#include "perturba/cli.hpp"

int main(int argc, char** argv) { return perturba::run_cli(argc, argv); }
