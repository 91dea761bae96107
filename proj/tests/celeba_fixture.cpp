// Real-data check against reference CelebA values. Skipped (exit 77)
// unless EMBAGG_CELEBA_MANIFEST names a manifest of a CelebA embedding dump
// stored in the toolkit's dataset format.

#include <iostream>

#include "celeba_reference.hpp"

int main() {
  const char* manifest = celeba::manifest_from_env();
  if (manifest == nullptr || *manifest == '\0') {
    std::cout << "EMBAGG_CELEBA_MANIFEST not set; skipping\n";
    return 77;
  }
  try {
    if (celeba::check(manifest, std::cerr)) {
      std::cout << "CelebA column reproduced within " << celeba::kTolerance << "\n";
      return 0;
    }
  } catch (const embagg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return 1;
}
