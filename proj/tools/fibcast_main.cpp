#include "fibcast/cli.hpp"

int main(int argc, char** argv) { return fibcast::cli::run(argc, argv); }
