#include "kdv/cli.hpp"

int main(int argc, char** argv) { return kdv::cli::main(argc, argv); }
