#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "embagg/evaluation.hpp"

namespace embagg {

/// Parameters of the synthetic ground-truth generator.
///
/// Each person has a latent center on the sphere of radius `center_scale`.
/// Image i of person p is center + N(0, intra_noise^2) per coordinate. With
/// `semantic_clusters` > 0, image i additionally carries the offset of
/// sub-cluster i mod semantic_clusters. Offsets are zero-mean across a
/// person's clusters and have coordinates of scale semantic_scale / sqrt(dim),
/// so `semantic_scale` is roughly the offset norm.
struct SynthSpec {
  std::size_t n_persons = 50;
  std::size_t images_per_person = 30;
  std::size_t dim = 64;
  double center_scale = 1.0;
  double intra_noise = 0.03;
  std::uint64_t seed = 0;
  std::size_t semantic_clusters = 0;
  double semantic_scale = 0.0;
  std::string name = "synthetic";

  /// Throws InvalidArgument on zero counts or negative/non-finite scales.
  void validate() const;
};

struct SynthDataset {
  Dataset persons;
  /// Latent centers, for oracle checks only; evaluation never reads them.
  std::vector<Embedding> centers;
};

/// Fully determined by `spec`. Coordinates are rounded to 32-bit float so the
/// in-memory dataset equals its on-disk form exactly.
///
/// Streams: center of person p from derive_seed(seed, 0, p), cluster offsets
/// from derive_seed(seed, 1, p), noise of image i from derive_seed(seed, 2, p, i).
SynthDataset generate_dataset(const SynthSpec& spec, std::size_t workers = 1);

}  // namespace embagg
