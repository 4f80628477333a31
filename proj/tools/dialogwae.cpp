#include <iostream>

#include "dialogwae/commands.hpp"

int main(int argc, char** argv) {
  return dialogwae::run_cli(argc, argv, std::cin, std::cout, std::cerr);
}
