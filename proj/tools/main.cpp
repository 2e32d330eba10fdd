#include "threespheres/cli.hpp"

int main(int argc, char** argv) { return threespheres::cli::main(argc, argv); }
