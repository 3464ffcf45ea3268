#include "capmink/cli.hpp"

int main(int argc, char** argv) { return capmink::run_cli(argc, argv); }
