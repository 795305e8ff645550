#include "gradepred/cli.hpp"

int main(int argc, char** argv) { return gradepred::cli::run(argc, argv); }
