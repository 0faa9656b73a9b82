#include "bhsr/cli.hpp"

int main(int argc, char** argv) { return bhsr::run_main(argc, argv); }
