#include "embagg/synthgen.hpp"

#include <cmath>
#include <cstdio>

#include "embagg/parallel.hpp"
#include "embagg/random.hpp"

namespace embagg {

void SynthSpec::validate() const {
  if (n_persons == 0 || images_per_person == 0 || dim == 0) {
    throw Error(ErrorCode::InvalidArgument, "synthetic counts must be >= 1");
  }
  if (!(center_scale > 0.0) || !std::isfinite(center_scale)) {
    throw Error(ErrorCode::InvalidArgument, "center_scale must be positive");
  }
  if (!(intra_noise >= 0.0) || !std::isfinite(intra_noise)) {
    throw Error(ErrorCode::InvalidArgument, "intra_noise must be non-negative");
  }
  if (!(semantic_scale >= 0.0) || !std::isfinite(semantic_scale)) {
    throw Error(ErrorCode::InvalidArgument, "semantic_scale must be non-negative");
  }
}

namespace {

double to_storage(double v) { return static_cast<double>(static_cast<float>(v)); }

std::string numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%05zu", prefix, i);
  return buf;
}

std::vector<double> sphere_point(Rng& rng, std::size_t dim, double radius) {
  std::vector<double> v(dim);
  double norm_sq = 0.0;
  do {
    norm_sq = 0.0;
    for (auto& x : v) {
      x = rng.gaussian();
      norm_sq += x * x;
    }
  } while (norm_sq == 0.0);
  const double scale = radius / std::sqrt(norm_sq);
  for (auto& x : v) x *= scale;
  return v;
}

std::vector<std::vector<double>> cluster_offsets(Rng& rng, const SynthSpec& spec) {
  const std::size_t c = spec.semantic_clusters;
  std::vector<std::vector<double>> offsets(c, std::vector<double>(spec.dim));
  const double coord_scale = spec.semantic_scale / std::sqrt(static_cast<double>(spec.dim));
  for (auto& off : offsets) {
    for (auto& x : off) x = coord_scale * rng.gaussian();
  }
  if (c > 1) {
    for (std::size_t j = 0; j < spec.dim; ++j) {
      double mean = 0.0;
      for (const auto& off : offsets) mean += off[j];
      mean /= static_cast<double>(c);
      for (auto& off : offsets) off[j] -= mean;
    }
  }
  return offsets;
}

}  // namespace

SynthDataset generate_dataset(const SynthSpec& spec, std::size_t workers) {
  spec.validate();
  SynthDataset out;
  out.persons.resize(spec.n_persons);
  std::vector<std::optional<Embedding>> centers(spec.n_persons);

  parallel_for(spec.n_persons, workers, [&](std::size_t p) {
    Rng center_rng(derive_seed(spec.seed, 0, p));
    std::vector<double> center = sphere_point(center_rng, spec.dim, spec.center_scale);
    for (auto& x : center) x = to_storage(x);

    std::vector<std::vector<double>> offsets;
    if (spec.semantic_clusters > 0) {
      Rng offset_rng(derive_seed(spec.seed, 1, p));
      offsets = cluster_offsets(offset_rng, spec);
    }

    PersonGallery& person = out.persons[p];
    person.person_id = numbered("person_", p);
    person.images.reserve(spec.images_per_person);
    std::vector<double> values(spec.dim);
    for (std::size_t i = 0; i < spec.images_per_person; ++i) {
      Rng noise_rng(derive_seed(spec.seed, 2, p, i));
      const std::vector<double>* offset =
          offsets.empty() ? nullptr : &offsets[i % spec.semantic_clusters];
      for (std::size_t j = 0; j < spec.dim; ++j) {
        double v = center[j] + spec.intra_noise * noise_rng.gaussian();
        if (offset) v += (*offset)[j];
        values[j] = to_storage(v);
      }
      TagSet tags{"synthetic"};
      if (offset) tags.insert("cluster:" + std::to_string(i % spec.semantic_clusters));
      person.images.push_back(
          {Embedding::validate(values, spec.dim), std::move(tags), numbered("img_", i)});
    }
    centers[p] = EmbeddingBuilder::adopt(std::move(center));
  });

  out.centers.reserve(spec.n_persons);
  for (auto& c : centers) out.centers.push_back(std::move(*c));
  return out;
}

}  // namespace embagg
