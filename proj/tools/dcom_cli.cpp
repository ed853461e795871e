#include "dcom/cli.hpp"

int main(int argc, char** argv) { return dcom::cli::cli_dispatch(argc, argv); }
