#include "cli.hpp"

int main(int argc, char** argv) { return inscribin::cli::run(argc, argv); }
