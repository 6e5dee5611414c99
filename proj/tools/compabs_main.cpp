#include "commands.hpp"

int main(int argc, char** argv) { return compabs::cli::run(argc, argv); }
