#include "reachguide/cli.hpp"

int main(int argc, char** argv) { return reachguide::run_cli(argc, argv); }
