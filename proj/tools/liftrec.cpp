#include "liftrec/cli/app.hpp"

int main(int argc, char** argv) { return liftrec::cli::run_cli(argc, argv); }
