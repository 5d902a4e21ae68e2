#include "spinread/cli.hpp"

int main(int argc, char** argv) { return spinread::cli::main_entry(argc, argv); }
