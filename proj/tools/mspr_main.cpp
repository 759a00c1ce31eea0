#include "mspr/cli.hpp"

int main(int argc, char** argv) { return mspr::run_cli(argc, argv); }
