#include "splatprop/cli.hpp"

int main(int argc, char** argv) { return splatprop::run_cli(argc, argv); }
