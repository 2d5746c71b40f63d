#include "cvfp/cli/cli.hpp"

int main(int argc, char** argv) { return cvfp::run_cli(argc, argv); }
