#include "s2p/cli.hpp"

int main(int argc, char** argv) { return s2p::cli::run(argc, argv); }
