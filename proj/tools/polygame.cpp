#include "polygame/cli.hpp"

int main(int argc, char** argv) { return polygame::cli::run(argc, argv); }
