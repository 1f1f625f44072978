#include "refprior/cli.hpp"

int main(int argc, char** argv) { return refprior::run_cli(argc, argv); }
