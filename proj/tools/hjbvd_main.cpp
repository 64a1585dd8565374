#include "hjbvd/cli.hpp"

int main(int argc, char** argv) { return hjbvd::cli::run_cli(argc, argv); }
