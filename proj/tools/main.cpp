#include "hybrid_id/cli.hpp"

int main(int argc, char** argv) { return hybrid_id::run_cli(argc, argv); }
