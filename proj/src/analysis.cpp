#include "embagg/analysis.hpp"

#include <cmath>
#include <optional>

#include "embagg/parallel.hpp"

namespace embagg {

void CurveSeries::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i > 0 && points[i].index <= points[i - 1].index) {
      throw Error(ErrorCode::InvalidArgument, "curve indices must strictly increase");
    }
    if (!std::isfinite(points[i].value) || points[i].value < 0.0) {
      throw Error(ErrorCode::InvalidArgument, "curve values must be finite and >= 0");
    }
  }
}

CurveSeries plateau_curve(std::span<const Embedding> images, CurveMetric metric,
                          std::string label) {
  if (images.size() < 2) {
    throw Error(ErrorCode::TooFewImages, "plateau curve needs at least two images");
  }
  require_uniform_dim(images);
  CurveSeries curve{std::move(label), {}};
  curve.points.reserve(images.size() - 1);
  RollingMeanState state;
  state = state.updated(images[0]);
  for (std::size_t k = 1; k < images.size(); ++k) {
    const Embedding& running = *state.mean();
    const double value = metric == CurveMetric::L2 ? l2_distance(running, images[k])
                                                   : l1_distance(running, images[k]);
    curve.points.push_back({k, value});
    state = state.updated(images[k]);
  }
  return curve;
}

std::vector<CurvePoint> curve_deltas(const CurveSeries& curve) {
  std::vector<CurvePoint> out;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    out.push_back({curve.points[i].index, curve.points[i].value - curve.points[i - 1].value});
  }
  return out;
}

CurveSeries rolling_template_curve(std::span<const Embedding> template_images,
                                   std::span<const Embedding> test_embs, std::string label) {
  if (template_images.empty() || test_embs.empty()) {
    throw Error(ErrorCode::EmptyInput, "rolling curve needs template and test images");
  }
  require_uniform_dim(template_images);
  for (const auto& t : test_embs) require_same_dim(template_images.front(), t);

  CurveSeries curve{std::move(label), {}};
  curve.points.reserve(template_images.size());
  RollingMeanState state;
  for (std::size_t k = 0; k < template_images.size(); ++k) {
    state = state.updated(template_images[k]);
    curve.points.push_back({k + 1, match_error(*state.mean(), test_embs)});
  }
  return curve;
}

GreedyTrace greedy_select(std::span<const GreedyCandidate> candidates,
                          std::span<const Embedding> test_embs, std::size_t k) {
  if (candidates.empty() || test_embs.empty()) {
    throw Error(ErrorCode::EmptyInput, "greedy selection needs candidates and test images");
  }
  if (k == 0 || k > candidates.size()) {
    throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " with " +
                                          std::to_string(candidates.size()) + " candidates");
  }
  const std::size_t dim = candidates.front().embedding.dim();
  for (const auto& c : candidates) require_same_dim(candidates.front().embedding, c.embedding);
  for (const auto& t : test_embs) require_same_dim(candidates.front().embedding, t);

  // Coordinate sums of the selected images, in selection order.
  std::vector<double> selected_sum(dim, 0.0);
  std::vector<bool> used(candidates.size(), false);
  std::vector<double> trial(dim);

  GreedyTrace trace;
  for (std::size_t step = 0; step < k; ++step) {
    const double divisor = static_cast<double>(step + 1);
    std::optional<std::size_t> best;
    double best_distance = 0.0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      if (used[c]) continue;
      const auto x = candidates[c].embedding.values();
      for (std::size_t j = 0; j < dim; ++j) trial[j] = (selected_sum[j] + x[j]) / divisor;
      const double d = match_error(EmbeddingBuilder::adopt(trial), test_embs);
      if (!best || d < best_distance) {
        best = c;
        best_distance = d;
      }
    }
    if (!trace.distances.empty() && best_distance > trace.distances.back()) {
      trace.truncated = true;
      break;
    }
    used[*best] = true;
    const auto x = candidates[*best].embedding.values();
    for (std::size_t j = 0; j < dim; ++j) selected_sum[j] += x[j];
    trace.selected.push_back(candidates[*best].id);
    trace.selected_indices.push_back(*best);
    trace.distances.push_back(best_distance);
  }
  return trace;
}

GallerySplit TemplateTestSelector::apply(const PersonGallery& g) const {
  GallerySplit split;
  const std::size_t n = g.images.size();
  auto is_test = [&](std::size_t i) {
    switch (kind) {
      case Kind::FirstN: return i >= count;
      case Kind::LastN: return i + count >= n;
      case Kind::TestTags:
        for (const auto& tag : g.images[i].tags) {
          if (test_tags.contains(tag)) return true;
        }
        return false;
    }
    return false;
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (is_test(i)) {
      split.tests.push_back(g.images[i].embedding);
      split.test_indices.push_back(i);
    } else {
      split.templates.push_back(g.images[i].embedding);
      split.template_indices.push_back(i);
    }
  }
  if (split.templates.empty() || split.tests.empty()) {
    throw Error(ErrorCode::TooFewImages,
                "person '" + g.person_id + "' has " + std::to_string(split.templates.size()) +
                    " template and " + std::to_string(split.tests.size()) + " test images");
  }
  return split;
}

std::string TemplateTestSelector::describe() const {
  switch (kind) {
    case Kind::FirstN: return "first " + std::to_string(count) + " template";
    case Kind::LastN: return "last " + std::to_string(count) + " test";
    case Kind::TestTags: {
      std::string out = "test tags:";
      for (const auto& t : test_tags) out += " " + t;
      return out;
    }
  }
  return {};
}

AveragedCurve average_curves(std::span<const CurveSeries> curves, std::string label) {
  std::vector<std::size_t> indices;
  std::vector<double> sums;
  std::vector<std::size_t> counts;
  for (const auto& curve : curves) {
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
      if (i >= indices.size()) {
        indices.push_back(curve.points[i].index);
        sums.push_back(0.0);
        counts.push_back(0);
      } else if (indices[i] != curve.points[i].index) {
        throw Error(ErrorCode::InvalidArgument, "curves have incompatible indices");
      }
      sums[i] += curve.points[i].value;
      ++counts[i];
    }
  }
  AveragedCurve out{{std::move(label), {}}, counts};
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.curve.points.push_back({indices[i], sums[i] / static_cast<double>(counts[i])});
  }
  return out;
}

CurveExperiment run_plateau(std::span<const PersonGallery> dataset, CurveMetric metric,
                            std::size_t workers) {
  std::vector<std::optional<CurveSeries>> curves(dataset.size());
  parallel_for(dataset.size(), workers, [&](std::size_t p) {
    const auto& person = dataset[p];
    if (person.images.size() < 2) return;
    std::vector<Embedding> embs;
    for (const auto& img : person.images) embs.push_back(img.embedding);
    curves[p] = plateau_curve(embs, metric, person.person_id);
  });
  CurveExperiment out;
  for (std::size_t p = 0; p < dataset.size(); ++p) {
    if (curves[p]) {
      out.per_person.push_back(std::move(*curves[p]));
    } else {
      out.skipped.push_back({dataset[p].person_id, "TooFewImages"});
    }
  }
  out.average = average_curves(out.per_person, "mean");
  return out;
}

namespace {

// Runs `fn(person, split)` per person; persons whose selector fails are skipped.
template <typename Result, typename Fn>
std::vector<std::optional<Result>> per_person_split(std::span<const PersonGallery> dataset,
                                                    const TemplateTestSelector& selector,
                                                    std::size_t workers,
                                                    std::vector<SkippedPerson>& skipped,
                                                    Fn&& fn) {
  std::vector<std::optional<Result>> results(dataset.size());
  std::vector<std::string> reasons(dataset.size());
  parallel_for(dataset.size(), workers, [&](std::size_t p) {
    GallerySplit split;
    try {
      split = selector.apply(dataset[p]);
    } catch (const Error& e) {
      reasons[p] = std::string(to_string(e.code()));
      return;
    }
    results[p] = fn(dataset[p], split);
  });
  for (std::size_t p = 0; p < dataset.size(); ++p) {
    if (!results[p]) skipped.push_back({dataset[p].person_id, reasons[p]});
  }
  return results;
}

}  // namespace

CurveExperiment run_rolling(std::span<const PersonGallery> dataset,
                            const TemplateTestSelector& selector, std::size_t every_nth,
                            std::size_t workers) {
  if (every_nth == 0) throw Error(ErrorCode::InvalidArgument, "every-nth step must be >= 1");
  CurveExperiment out;
  auto results = per_person_split<CurveSeries>(
      dataset, selector, workers, out.skipped,
      [&](const PersonGallery& person, const GallerySplit& split) {
        const auto used =
            subsample_every_nth(std::span<const Embedding>(split.templates), every_nth);
        return rolling_template_curve(used, split.tests, person.person_id);
      });
  for (auto& r : results) {
    if (r) out.per_person.push_back(std::move(*r));
  }
  out.average = average_curves(out.per_person, "mean");
  return out;
}

GreedyExperiment run_greedy(std::span<const PersonGallery> dataset,
                            const TemplateTestSelector& selector, std::size_t k,
                            std::size_t workers) {
  if (k == 0) throw Error(ErrorCode::KTooLarge, "k must be >= 1");
  GreedyExperiment out;
  auto results = per_person_split<PersonTrace>(
      dataset, selector, workers, out.skipped,
      [&](const PersonGallery& person, const GallerySplit& split) {
        std::vector<GreedyCandidate> candidates;
        for (std::size_t i = 0; i < split.templates.size(); ++i) {
          candidates.push_back({person.images[split.template_indices[i]].source_name,
                                split.templates[i]});
        }
        PersonTrace pt;
        pt.person_id = person.person_id;
        pt.trace = greedy_select(candidates, split.tests, std::min(k, candidates.size()));
        pt.all_images_distance = match_error(aggregate(Strategy::Mean, split.templates),
                                             split.tests);
        return pt;
      });
  std::vector<double> sums;
  double all_sum = 0.0;
  for (auto& r : results) {
    if (!r) continue;
    const auto& d = r->trace.distances;
    for (std::size_t s = 0; s < d.size(); ++s) {
      if (s >= sums.size()) {
        sums.push_back(0.0);
        out.persons_per_step.push_back(0);
      }
      sums[s] += d[s];
      ++out.persons_per_step[s];
    }
    all_sum += r->all_images_distance;
    out.per_person.push_back(std::move(*r));
  }
  for (std::size_t s = 0; s < sums.size(); ++s) {
    out.average_per_step.push_back(sums[s] / static_cast<double>(out.persons_per_step[s]));
  }
  if (!out.per_person.empty()) {
    out.average_all_images = all_sum / static_cast<double>(out.per_person.size());
  }
  return out;
}

}  // namespace embagg
