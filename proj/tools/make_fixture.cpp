#include "fixtures.hpp"

#include <iostream>

// Regenerates the bundled planted-3-cluster archive.
int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixture OUT_DIR\n";
    return 2;
  }
  try {
    const auto a = infostruct::fixtures::bundled_planted3();
    infostruct::write_archive(argv[1], a.vectors, a.labels);
  } catch (const std::exception& e) {
    std::cerr << "E: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
