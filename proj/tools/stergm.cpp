#include "stergm/cli.hpp"

int main(int argc, char **argv) { return stergm::cli::run(argc, argv); }
