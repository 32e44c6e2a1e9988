#include "cli_app.hpp"

int main(int argc, char** argv) { return polaroptics::cli::main(argc, argv); }
