#include "cli.hpp"

int main(int argc, char** argv) { return svddsel::cli::run(argc, argv); }
