#include "pointacl/cli.hpp"

int main(int argc, char** argv) { return pointacl::cli::route(argc, argv); }
