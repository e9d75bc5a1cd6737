#include "nucleifuse/cli.hpp"

int main(int argc, char** argv) { return nucleifuse::cli::run(argc, argv); }
