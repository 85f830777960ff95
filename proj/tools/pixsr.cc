#include <iostream>

#include "pixsr/cli.h"

int main(int argc, char** argv) {
  return pixsr::RunCli(argc, argv, std::cout, std::cerr);
}
