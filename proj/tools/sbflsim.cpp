#include "sbfl/harness.hpp"

int main(int argc, char** argv) { return sbfl::harness::run_cli(argc, argv); }
