#include "strnn_cli.hpp"

int main(int argc, char** argv) { return strnn::cli::run(argc, argv); }
