#include "cli.hpp"

int main(int argc, char** argv) { return synthweave::cli::run(argc, argv); }
