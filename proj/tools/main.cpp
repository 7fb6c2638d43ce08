#include "dynlearn/app.hpp"

int main(int argc, char** argv) { return dynlearn::run_cli(argc, argv); }
