#include "mixsurv/cli.hpp"

int main(int argc, char** argv) { return mixsurv::run_cli(argc, argv); }
