#include "crossaug/cli.h"

int main(int argc, char** argv) { return crossaug::run_cli(argc, argv); }
