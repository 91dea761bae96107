#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "embagg/evaluation.hpp"

namespace embagg {

struct CurvePoint {
  std::size_t index = 0;  // 1-based
  double value = 0.0;

  bool operator==(const CurvePoint&) const = default;
};

/// Ordered (index, value) series with strictly increasing indices and
/// finite, non-negative values.
struct CurveSeries {
  std::string label;
  std::vector<CurvePoint> points;

  /// Throws InvalidArgument if the invariants do not hold.
  void validate() const;
  bool operator==(const CurveSeries&) const = default;
};

enum class CurveMetric { L2, L1 };

/// Distance of each next image to the running mean of all earlier images.
/// Point k (1..n-1) compares images[k] with mean(images[0..k-1]).
/// Throws TooFewImages for fewer than two images.
CurveSeries plateau_curve(std::span<const Embedding> images,
                          CurveMetric metric = CurveMetric::L2, std::string label = {});

/// Successive differences value[k] - value[k-1]; positive entries are upticks.
/// Index of each delta is the later point's index.
std::vector<CurvePoint> curve_deltas(const CurveSeries& curve);

/// Point k is match_error(mean(template_images[0..k-1]), test_embs).
CurveSeries rolling_template_curve(std::span<const Embedding> template_images,
                                   std::span<const Embedding> test_embs,
                                   std::string label = {});

/// Elements at positions 0, n, 2n, ...; throws InvalidArgument for n == 0.
template <typename T>
std::vector<T> subsample_every_nth(std::span<const T> items, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "every-nth step must be >= 1");
  std::vector<T> out;
  out.reserve(items.size() / n + 1);
  for (std::size_t i = 0; i < items.size(); i += n) out.push_back(items[i]);
  return out;
}

struct GreedyCandidate {
  std::string id;
  Embedding embedding;
};

struct GreedyTrace {
  std::vector<std::string> selected;
  std::vector<std::size_t> selected_indices;
  std::vector<double> distances;  // after each selection, non-increasing
  bool truncated = false;         // stopped before k: every remaining pick got worse

  bool operator==(const GreedyTrace&) const = default;
};

/// Greedy forward selection of template images. Each step adds the candidate
/// whose inclusion minimizes match_error(mean(selected + candidate), tests);
/// ties go to the lowest candidate index. Stops early when every remaining
/// candidate would strictly increase the distance.
/// Throws EmptyInput, KTooLarge (k == 0 or k > candidates), DimensionMismatch.
GreedyTrace greedy_select(std::span<const GreedyCandidate> candidates,
                          std::span<const Embedding> test_embs, std::size_t k);

/// How an experiment divides a gallery into template and test images.
struct TemplateTestSelector {
  enum class Kind { FirstN, LastN, TestTags };

  Kind kind = Kind::FirstN;
  std::size_t count = 10;  // FirstN: template count; LastN: test count
  TagSet test_tags;        // TestTags: images carrying any of these are tests

  GallerySplit apply(const PersonGallery& g) const;
  std::string describe() const;
};

/// Mean over curves of the value at each index; `counts[i]` is the number of
/// curves contributing to point i (curves may differ in length).
struct AveragedCurve {
  CurveSeries curve;
  std::vector<std::size_t> counts;
};

AveragedCurve average_curves(std::span<const CurveSeries> curves, std::string label);

struct PersonTrace {
  std::string person_id;
  GreedyTrace trace;
  double all_images_distance = 0.0;  // match_error of the mean of every candidate
};

struct CurveExperiment {
  std::vector<CurveSeries> per_person;  // label = person_id
  AveragedCurve average;
  std::vector<SkippedPerson> skipped;
};

struct GreedyExperiment {
  std::vector<PersonTrace> per_person;
  std::vector<double> average_per_step;
  std::vector<std::size_t> persons_per_step;
  double average_all_images = 0.0;
  std::vector<SkippedPerson> skipped;
};

/// Plateau curve for every person with at least two images.
CurveExperiment run_plateau(std::span<const PersonGallery> dataset, CurveMetric metric,
                            std::size_t workers = 1);

/// Rolling-template curve for every person, using every `every_nth` template
/// image (1 = all).
CurveExperiment run_rolling(std::span<const PersonGallery> dataset,
                            const TemplateTestSelector& selector, std::size_t every_nth,
                            std::size_t workers = 1);

/// Greedy selection of up to k template images per person.
GreedyExperiment run_greedy(std::span<const PersonGallery> dataset,
                            const TemplateTestSelector& selector, std::size_t k,
                            std::size_t workers = 1);

}  // namespace embagg
