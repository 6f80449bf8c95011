#include "setrisk/cli.hpp"

int main(int argc, char** argv) { return setrisk::cli::run(argc, argv); }
