#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "embagg/aggregation.hpp"
#include "embagg/embedding.hpp"

namespace embagg {

using TagSet = std::set<std::string>;

struct Image {
  Embedding embedding;
  TagSet tags;
  std::string source_name;
};

/// One person's images in canonical dataset order.
struct PersonGallery {
  std::string person_id;
  std::vector<Image> images;
};

using Dataset = std::vector<PersonGallery>;

/// Template/test split: the first `n_template` images are template
/// candidates, the rest are test images. With a tag filter only template
/// candidates carrying one of the tags are used; the baseline is the
/// `baseline_index`-th surviving template image.
struct SplitSpec {
  std::size_t n_template = 10;
  std::optional<TagSet> template_tag_filter;
  std::size_t baseline_index = 0;

  /// Throws InvalidArgument when n_template == 0 or baseline_index >= n_template.
  void validate() const;
};

struct GallerySplit {
  std::vector<Embedding> templates;
  std::vector<Embedding> tests;
  std::vector<std::size_t> template_indices;  // positions in the gallery
  std::vector<std::size_t> test_indices;
};

/// Template-eligibility mask over a gallery. Test images are not affected.
class TemplateEligibility {
 public:
  TemplateEligibility(const PersonGallery& gallery, const TagSet& tags);

  bool eligible(std::size_t image_index) const { return mask_.at(image_index); }
  std::size_t eligible_count() const;

 private:
  std::vector<bool> mask_;
};

TemplateEligibility filter_templates_by_tag(const PersonGallery& g, const TagSet& tags);

/// Throws TooFewImages (gallery has <= n_template images) or
/// EmptyTemplateAfterFilter (filter leaves no template image, or fewer than
/// baseline_index + 1).
GallerySplit split_gallery(const PersonGallery& g, const SplitSpec& spec);

/// Mean L2 distance from `templ` to each of `test_embs`.
double match_error(const Embedding& templ, std::span<const Embedding> test_embs);

/// Same metric against other persons' test images.
double nonmatch_error(const Embedding& templ, std::span<const Embedding> negatives);

/// baseline / strategy; throws NonPositiveInput unless both are > 0.
double factor_vs_baseline(double baseline_err, double strategy_err);

struct NonmatchSampling {
  enum class Mode { Full, Sampled };

  Mode mode = Mode::Full;
  std::size_t probes_per_person = 0;
  std::uint64_t seed = 0;

  static NonmatchSampling full(std::uint64_t seed = 0) { return {Mode::Full, 0, seed}; }
  static NonmatchSampling sampled(std::size_t k, std::uint64_t seed) {
    return {Mode::Sampled, k, seed};
  }
  /// Full cross-product up to 500 persons, otherwise 200 sampled probes per
  /// template.
  static NonmatchSampling automatic(std::size_t person_count, std::uint64_t seed);

  std::string describe() const;
};

/// Sampled negative probes for one person: up to k distinct positions in
/// [0, pool_size), ascending, keyed by (seed, person_id).
std::vector<std::size_t> sample_probe_positions(std::size_t pool_size, std::size_t k,
                                                std::uint64_t seed,
                                                const std::string& person_id);

struct StrategyRow {
  Strategy strategy = Strategy::Baseline;
  bool oracle = false;
  double match_distance = 0.0;
  double nonmatch_distance = 0.0;
  // Absent when either distance is zero (ratio undefined).
  std::optional<double> match_factor;
  std::optional<double> nonmatch_factor;
  std::size_t match_pairs = 0;
  std::size_t nonmatch_pairs = 0;

  bool operator==(const StrategyRow&) const = default;
};

struct PersonStrategyResult {
  double match_mean = 0.0;
  double match_sq_mean = 0.0;
  double nonmatch_mean = 0.0;
};

struct PersonResult {
  std::string person_id;
  std::vector<PersonStrategyResult> per_strategy;  // parallel to report rows
};

struct SkippedPerson {
  std::string person_id;
  std::string reason;
};

struct EvaluationReport {
  std::string dataset_name;
  std::size_t dim = 0;
  std::size_t person_count = 0;
  std::vector<SkippedPerson> skipped;
  SplitSpec split;
  NonmatchSampling sampling;
  std::vector<StrategyRow> rows;
  // In-memory diagnostics only; not serialized.
  std::vector<PersonResult> per_person;

  const StrategyRow* row(Strategy s) const;
};

/// Evaluates each strategy over every person whose gallery satisfies the
/// split. Persons failing the split are skipped and listed. Distances are
/// pooled over all (person, probe) pairs. Per-person work runs on `workers`
/// threads; the reduction runs in dataset order, so the report does not
/// depend on the worker count.
///
/// Throws InsufficientPersons when fewer than two persons remain.
EvaluationReport evaluate_strategies(std::span<const PersonGallery> dataset,
                                     std::span<const Strategy> strategies,
                                     const SplitSpec& spec,
                                     const NonmatchSampling& sampling,
                                     std::size_t workers = 1,
                                     std::string dataset_name = {});

}  // namespace embagg
