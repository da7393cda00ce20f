#include "idorscan/cli.hpp"

int main(int argc, char** argv) { return idorscan::cli::run(argc, argv); }
