#include "cli.hpp"

int main(int argc, char** argv) { return himpc::cli::run(argc, argv); }
