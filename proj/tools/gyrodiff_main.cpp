#include "gyrodiff/cli.hpp"

int main(int argc, char** argv) { return gyrodiff::cli::run(argc, argv); }
