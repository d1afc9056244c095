#include "stg3net/cli.hpp"
int main(int argc, char** argv) { return stg3net::cli::main(argc, argv); }
