#include "dhflex/cli.hpp"

int main(int argc, char** argv) { return dhflex::cli::main_impl(argc, argv); }
