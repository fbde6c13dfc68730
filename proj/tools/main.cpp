#include "cli_app.hpp"

int main(int argc, char** argv) { return infostruct::cli::run(argc, argv); }
