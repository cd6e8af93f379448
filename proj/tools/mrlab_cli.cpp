#include "mrlab/cli_app.hpp"

int main(int argc, char** argv) { return mrlab::run_cli(argc, argv); }
