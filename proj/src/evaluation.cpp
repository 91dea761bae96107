#include "embagg/evaluation.hpp"

#include <algorithm>
#include <unordered_set>

#include "embagg/parallel.hpp"
#include "embagg/random.hpp"

namespace embagg {

void SplitSpec::validate() const {
  if (n_template == 0) {
    throw Error(ErrorCode::InvalidArgument, "n_template must be at least 1");
  }
  if (baseline_index >= n_template) {
    throw Error(ErrorCode::InvalidArgument, "baseline_index must be below n_template");
  }
}

TemplateEligibility::TemplateEligibility(const PersonGallery& gallery, const TagSet& tags)
    : mask_(gallery.images.size(), false) {
  for (std::size_t i = 0; i < gallery.images.size(); ++i) {
    for (const auto& tag : gallery.images[i].tags) {
      if (tags.contains(tag)) {
        mask_[i] = true;
        break;
      }
    }
  }
}

std::size_t TemplateEligibility::eligible_count() const {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), true));
}

TemplateEligibility filter_templates_by_tag(const PersonGallery& g, const TagSet& tags) {
  return TemplateEligibility(g, tags);
}

GallerySplit split_gallery(const PersonGallery& g, const SplitSpec& spec) {
  spec.validate();
  if (g.images.size() <= spec.n_template) {
    throw Error(ErrorCode::TooFewImages,
                "person '" + g.person_id + "' has " + std::to_string(g.images.size()) +
                    " images, needs more than " + std::to_string(spec.n_template));
  }
  std::optional<TemplateEligibility> eligibility;
  if (spec.template_tag_filter) eligibility.emplace(g, *spec.template_tag_filter);

  GallerySplit split;
  for (std::size_t i = 0; i < spec.n_template; ++i) {
    if (eligibility && !eligibility->eligible(i)) continue;
    split.templates.push_back(g.images[i].embedding);
    split.template_indices.push_back(i);
  }
  for (std::size_t i = spec.n_template; i < g.images.size(); ++i) {
    split.tests.push_back(g.images[i].embedding);
    split.test_indices.push_back(i);
  }
  if (split.templates.size() <= spec.baseline_index) {
    throw Error(ErrorCode::EmptyTemplateAfterFilter,
                "person '" + g.person_id + "' keeps " +
                    std::to_string(split.templates.size()) +
                    " template images after the tag filter");
  }
  require_uniform_dim(split.templates);
  for (const auto& t : split.tests) require_same_dim(split.templates.front(), t);
  return split;
}

double match_error(const Embedding& templ, std::span<const Embedding> test_embs) {
  if (test_embs.empty()) throw Error(ErrorCode::EmptyInput, "no test embeddings");
  double sum = 0.0;
  for (const auto& t : test_embs) sum += l2_distance(t, templ);
  return sum / static_cast<double>(test_embs.size());
}

double nonmatch_error(const Embedding& templ, std::span<const Embedding> negatives) {
  if (negatives.empty()) throw Error(ErrorCode::EmptyInput, "no non-match probes");
  return match_error(templ, negatives);
}

double factor_vs_baseline(double baseline_err, double strategy_err) {
  if (!(baseline_err > 0.0) || !(strategy_err > 0.0)) {
    throw Error(ErrorCode::NonPositiveInput, "factor needs positive distances");
  }
  return baseline_err / strategy_err;
}

NonmatchSampling NonmatchSampling::automatic(std::size_t person_count, std::uint64_t seed) {
  if (person_count <= 500) return full(seed);
  return sampled(200, seed);
}

std::string NonmatchSampling::describe() const {
  if (mode == Mode::Full) return "full";
  return "sampled:" + std::to_string(probes_per_person);
}

// Floyd's algorithm: k distinct draws with exactly k calls to the generator.
std::vector<std::size_t> sample_probe_positions(std::size_t pool_size, std::size_t k,
                                                std::uint64_t seed,
                                                const std::string& person_id) {
  std::vector<std::size_t> out;
  if (k >= pool_size) {
    out.resize(pool_size);
    for (std::size_t i = 0; i < pool_size; ++i) out[i] = i;
    return out;
  }
  Rng rng(derive_seed(seed, fnv1a64(person_id)));
  std::unordered_set<std::size_t> chosen;
  chosen.reserve(k * 2);
  for (std::size_t j = pool_size - k; j < pool_size; ++j) {
    const auto t = static_cast<std::size_t>(rng.below(j + 1));
    chosen.insert(chosen.contains(t) ? j : t);
  }
  out.assign(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

const StrategyRow* EvaluationReport::row(Strategy s) const {
  for (const auto& r : rows) {
    if (r.strategy == s) return &r;
  }
  return nullptr;
}

namespace {

struct Accumulator {
  double match_sum = 0.0;
  double match_sq_sum = 0.0;
  std::size_t match_n = 0;
  double nonmatch_sum = 0.0;
  std::size_t nonmatch_n = 0;

  void add_match(double d) {
    match_sum += d;
    match_sq_sum += d * d;
    ++match_n;
  }
  void add_nonmatch(double d) {
    nonmatch_sum += d;
    ++nonmatch_n;
  }
};

double min_distance(std::span<const Embedding> candidates, const Embedding& probe) {
  return best_template_per_comparison(candidates, probe).distance;
}

Accumulator evaluate_one(Strategy s, const GallerySplit& split, std::size_t baseline_index,
                         std::span<const Embedding* const> negatives) {
  Accumulator acc;
  if (s == Strategy::BestPerComparison) {
    for (const auto& t : split.tests) acc.add_match(min_distance(split.templates, t));
    for (const Embedding* n : negatives) acc.add_nonmatch(min_distance(split.templates, *n));
    return acc;
  }
  const Embedding templ = [&] {
    if (s == Strategy::Baseline) return split.templates[baseline_index];
    if (s == Strategy::Optimal) return optimal_template(split.tests);
    return aggregate(s, split.templates);
  }();
  for (const auto& t : split.tests) acc.add_match(l2_distance(t, templ));
  for (const Embedding* n : negatives) acc.add_nonmatch(l2_distance(*n, templ));
  return acc;
}

double safe_mean(double sum, std::size_t n) {
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

std::optional<double> optional_factor(double baseline, double value) {
  if (baseline > 0.0 && value > 0.0) return factor_vs_baseline(baseline, value);
  return std::nullopt;
}

}  // namespace

EvaluationReport evaluate_strategies(std::span<const PersonGallery> dataset,
                                     std::span<const Strategy> strategies,
                                     const SplitSpec& spec,
                                     const NonmatchSampling& sampling,
                                     std::size_t workers, std::string dataset_name) {
  spec.validate();
  if (sampling.mode == NonmatchSampling::Mode::Sampled && sampling.probes_per_person == 0) {
    throw Error(ErrorCode::InvalidArgument, "sampled non-match mode needs k >= 1");
  }

  std::vector<Strategy> shown;
  for (Strategy s : kAllStrategies) {
    if (std::find(strategies.begin(), strategies.end(), s) != strategies.end()) {
      shown.push_back(s);
    }
  }
  if (shown.empty()) throw Error(ErrorCode::InvalidArgument, "no strategies requested");
  std::vector<Strategy> computed = shown;
  if (computed.front() != Strategy::Baseline) {
    computed.insert(computed.begin(), Strategy::Baseline);
  }

  EvaluationReport report;
  report.dataset_name = std::move(dataset_name);
  report.split = spec;
  report.sampling = sampling;

  std::vector<const PersonGallery*> kept;
  std::vector<GallerySplit> splits;
  for (const auto& person : dataset) {
    try {
      splits.push_back(split_gallery(person, spec));
      kept.push_back(&person);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TooFewImages &&
          e.code() != ErrorCode::EmptyTemplateAfterFilter) {
        throw;
      }
      report.skipped.push_back({person.person_id, std::string(to_string(e.code()))});
    }
  }
  if (kept.size() < 2) {
    throw Error(ErrorCode::InsufficientPersons,
                "need at least 2 evaluable persons, have " + std::to_string(kept.size()));
  }
  report.person_count = kept.size();
  report.dim = splits.front().templates.front().dim();

  // All test embeddings, person after person; person p owns [begin[p], begin[p+1]).
  std::vector<const Embedding*> all_tests;
  std::vector<std::size_t> begin(kept.size() + 1, 0);
  for (std::size_t p = 0; p < kept.size(); ++p) {
    begin[p] = all_tests.size();
    for (const auto& t : splits[p].tests) {
      require_same_dim(splits.front().templates.front(), t);
      all_tests.push_back(&t);
    }
  }
  begin[kept.size()] = all_tests.size();

  std::vector<std::vector<Accumulator>> accs(kept.size());
  parallel_for(kept.size(), workers, [&](std::size_t p) {
    const std::size_t own_begin = begin[p];
    const std::size_t own_count = begin[p + 1] - begin[p];
    const std::size_t pool = all_tests.size() - own_count;
    std::vector<const Embedding*> negatives;
    auto position_to_global = [&](std::size_t pos) {
      return pos < own_begin ? pos : pos + own_count;
    };
    if (sampling.mode == NonmatchSampling::Mode::Full) {
      negatives.reserve(pool);
      for (std::size_t pos = 0; pos < pool; ++pos) {
        negatives.push_back(all_tests[position_to_global(pos)]);
      }
    } else {
      for (std::size_t pos : sample_probe_positions(pool, sampling.probes_per_person,
                                                    sampling.seed, kept[p]->person_id)) {
        negatives.push_back(all_tests[position_to_global(pos)]);
      }
    }
    accs[p].reserve(computed.size());
    for (Strategy s : computed) {
      accs[p].push_back(evaluate_one(s, splits[p], spec.baseline_index, negatives));
    }
  });

  std::vector<Accumulator> totals(computed.size());
  for (std::size_t p = 0; p < kept.size(); ++p) {
    for (std::size_t i = 0; i < computed.size(); ++i) {
      const Accumulator& a = accs[p][i];
      totals[i].match_sum += a.match_sum;
      totals[i].match_sq_sum += a.match_sq_sum;
      totals[i].match_n += a.match_n;
      totals[i].nonmatch_sum += a.nonmatch_sum;
      totals[i].nonmatch_n += a.nonmatch_n;
    }
  }

  const double base_match = safe_mean(totals[0].match_sum, totals[0].match_n);
  const double base_nonmatch = safe_mean(totals[0].nonmatch_sum, totals[0].nonmatch_n);
  const std::size_t offset = computed.size() - shown.size();
  for (std::size_t i = offset; i < computed.size(); ++i) {
    StrategyRow row;
    row.strategy = computed[i];
    row.oracle = is_oracle(computed[i]);
    row.match_distance = safe_mean(totals[i].match_sum, totals[i].match_n);
    row.nonmatch_distance = safe_mean(totals[i].nonmatch_sum, totals[i].nonmatch_n);
    row.match_pairs = totals[i].match_n;
    row.nonmatch_pairs = totals[i].nonmatch_n;
    if (row.strategy == Strategy::Baseline) {
      row.match_factor = 1.0;
      row.nonmatch_factor = 1.0;
    } else {
      row.match_factor = optional_factor(base_match, row.match_distance);
      row.nonmatch_factor = optional_factor(base_nonmatch, row.nonmatch_distance);
    }
    report.rows.push_back(row);
  }

  report.per_person.reserve(kept.size());
  for (std::size_t p = 0; p < kept.size(); ++p) {
    PersonResult pr{kept[p]->person_id, {}};
    for (std::size_t i = offset; i < computed.size(); ++i) {
      const Accumulator& a = accs[p][i];
      pr.per_strategy.push_back({safe_mean(a.match_sum, a.match_n),
                                 safe_mean(a.match_sq_sum, a.match_n),
                                 safe_mean(a.nonmatch_sum, a.nonmatch_n)});
    }
    report.per_person.push_back(std::move(pr));
  }
  return report;
}

}  // namespace embagg
