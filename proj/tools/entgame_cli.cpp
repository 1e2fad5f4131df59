#include "entgame/cli.hpp"

int main(int argc, char** argv) { return entgame::cli::run(argc, argv); }
