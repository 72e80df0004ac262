#include "cli.hpp"

int main(int argc, char** argv) { return lshm::cli::run(argc, argv); }
