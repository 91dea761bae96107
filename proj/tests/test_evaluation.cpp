#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "embagg/evaluation.hpp"
#include "embagg/synthgen.hpp"
#include "oracles.hpp"

using namespace embagg;

namespace {

PersonGallery gallery_of(std::size_t n, std::size_t dim = 2, std::string id = "p") {
  PersonGallery g{std::move(id), {}};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(dim, static_cast<double>(i));
    g.images.push_back({Embedding::validate(v, dim), {}, "img" + std::to_string(i)});
  }
  return g;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an embagg::Error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("split_gallery") {
  SplitSpec spec;
  spec.n_template = 10;

  const auto s30 = split_gallery(gallery_of(30), spec);
  CHECK(s30.templates.size() == 10);
  CHECK(s30.tests.size() == 20);
  CHECK(s30.template_indices.front() == 0);
  CHECK(s30.test_indices.front() == 10);

  const auto s11 = split_gallery(gallery_of(11), spec);
  CHECK(s11.templates.size() == 10);
  CHECK(s11.tests.size() == 1);

  CHECK(code_of([&] { split_gallery(gallery_of(10), spec); }) == ErrorCode::TooFewImages);

  spec.n_template = 0;
  CHECK(code_of([&] { split_gallery(gallery_of(30), spec); }) == ErrorCode::InvalidArgument);
  spec.n_template = 3;
  spec.baseline_index = 3;
  CHECK(code_of([&] { split_gallery(gallery_of(30), spec); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("tag filter") {
  PersonGallery g = gallery_of(8);
  for (std::size_t i = 0; i < g.images.size(); ++i) {
    g.images[i].tags = {i % 2 == 0 ? "expression:normal" : "expression:smile"};
  }
  const auto normal = filter_templates_by_tag(g, {"expression:normal"});
  CHECK(normal.eligible_count() == 4);
  CHECK(normal.eligible(0));
  CHECK_FALSE(normal.eligible(1));

  const auto all = filter_templates_by_tag(g, {"expression:normal", "expression:smile"});
  CHECK(all.eligible_count() == g.images.size());

  CHECK(filter_templates_by_tag(g, {"nonexistent"}).eligible_count() == 0);

  SplitSpec spec;
  spec.n_template = 4;
  spec.template_tag_filter = TagSet{"expression:smile"};
  const auto split = split_gallery(g, spec);
  CHECK(split.template_indices == std::vector<std::size_t>{1, 3});
  CHECK(split.test_indices == std::vector<std::size_t>{4, 5, 6, 7});
  // baseline is the first image passing the filter
  CHECK(split.templates[spec.baseline_index] == g.images[1].embedding);

  spec.template_tag_filter = TagSet{"nonexistent"};
  CHECK(code_of([&] { split_gallery(g, spec); }) == ErrorCode::EmptyTemplateAfterFilter);
}

TEST_CASE("match_error and nonmatch_error") {
  const auto x = Embedding::of({1, 2});
  const std::vector<Embedding> same{x, x, x};
  CHECK(match_error(x, same) == 0.0);

  const std::vector<Embedding> tests{Embedding::of({3, 4}), Embedding::of({0, 5})};
  CHECK(match_error(Embedding::of({0, 0}), tests) == 5.0);

  const std::vector<Embedding> none;
  CHECK(code_of([&] { match_error(x, none); }) == ErrorCode::EmptyInput);
  CHECK(code_of([&] { nonmatch_error(x, none); }) == ErrorCode::EmptyInput);

  const std::vector<Embedding> at_two{Embedding::of({2, 0}), Embedding::of({0, -2}),
                                      Embedding::of({-2, 0})};
  CHECK(nonmatch_error(Embedding::of({0, 0}), at_two) == 2.0);
  const std::vector<Embedding> one_neg{x};
  CHECK(nonmatch_error(x, one_neg) == 0.0);

  Rng rng(derive_seed(5));
  const auto templ = oracle::random_embedding(rng, 64);
  const auto probes = oracle::random_embeddings(rng, 20, 64);
  double sum = 0.0;
  for (const auto& p : probes) {
    double s = 0.0;
    for (std::size_t j = 0; j < 64; ++j) s += (p[j] - templ[j]) * (p[j] - templ[j]);
    sum += std::sqrt(s);
  }
  CHECK(match_error(templ, probes) == doctest::Approx(sum / 20.0).epsilon(1e-12));
}

TEST_CASE("factor_vs_baseline") {
  CHECK(factor_vs_baseline(0.748, 0.410) == doctest::Approx(1.8243902439).epsilon(1e-9));
  CHECK(factor_vs_baseline(0.5, 0.5) == 1.0);
  CHECK(factor_vs_baseline(1.958, 1.622) == doctest::Approx(1.2071516646).epsilon(1e-9));
  CHECK(code_of([] { factor_vs_baseline(0.0, 1.0); }) == ErrorCode::NonPositiveInput);
  CHECK(code_of([] { factor_vs_baseline(1.0, -1.0); }) == ErrorCode::NonPositiveInput);
}

TEST_CASE("probe sampling") {
  const auto a = sample_probe_positions(1000, 50, 7, "person_a");
  CHECK(a.size() == 50);
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK(std::adjacent_find(a.begin(), a.end()) == a.end());
  CHECK(a.back() < 1000);
  CHECK(a == sample_probe_positions(1000, 50, 7, "person_a"));
  CHECK(a != sample_probe_positions(1000, 50, 7, "person_b"));
  CHECK(a != sample_probe_positions(1000, 50, 8, "person_a"));
  CHECK(sample_probe_positions(5, 10, 1, "x") == std::vector<std::size_t>{0, 1, 2, 3, 4});
  CHECK(NonmatchSampling::automatic(500, 3).mode == NonmatchSampling::Mode::Full);
  const auto big = NonmatchSampling::automatic(2323, 3);
  CHECK(big.mode == NonmatchSampling::Mode::Sampled);
  CHECK(big.probes_per_person == 200);
}

TEST_CASE("evaluate_strategies on identical copies") {
  Dataset ds;
  for (int p = 0; p < 2; ++p) {
    PersonGallery g{"p" + std::to_string(p), {}};
    const auto e = Embedding::of({static_cast<double>(p), 1.0, -1.0});
    for (int i = 0; i < 12; ++i) g.images.push_back({e, {}, "i" + std::to_string(i)});
    ds.push_back(g);
  }
  const std::vector<Strategy> all(std::begin(kAllStrategies), std::end(kAllStrategies));
  const auto r = evaluate_strategies(ds, all, SplitSpec{}, NonmatchSampling::full());
  REQUIRE(r.rows.size() == all.size());
  for (const auto& row : r.rows) {
    CHECK(row.match_distance == 0.0);
    CHECK(row.nonmatch_distance == doctest::Approx(1.0));
  }
  const auto* base = r.row(Strategy::Baseline);
  CHECK(*base->match_factor == 1.0);
  CHECK(*base->nonmatch_factor == 1.0);
  CHECK_FALSE(r.row(Strategy::Mean)->match_factor.has_value());
}

TEST_CASE("evaluate_strategies against a brute-force recomputation") {
  SynthSpec spec;
  spec.n_persons = 5;
  spec.images_per_person = 8;
  spec.dim = 6;
  spec.intra_noise = 0.2;
  spec.seed = 11;
  const auto data = generate_dataset(spec);
  SplitSpec split;
  split.n_template = 3;
  const std::vector<Strategy> strategies{Strategy::Baseline, Strategy::Mean,
                                         Strategy::BestPerComparison, Strategy::Optimal};
  const auto r = evaluate_strategies(data.persons, strategies, split, NonmatchSampling::full());
  CHECK(r.person_count == 5);
  CHECK(r.dim == 6);

  // Brute force over all pairs.
  std::vector<std::vector<oracle::Vec>> templ(5), tests(5);
  for (std::size_t p = 0; p < 5; ++p) {
    for (std::size_t i = 0; i < 8; ++i) {
      auto v = oracle::to_vec(data.persons[p].images[i].embedding);
      (i < 3 ? templ[p] : tests[p]).push_back(v);
    }
  }
  auto template_for = [&](Strategy s, std::size_t p) {
    if (s == Strategy::Baseline) return templ[p][0];
    if (s == Strategy::Mean) return oracle::mean(templ[p]);
    return oracle::mean(tests[p]);
  };
  for (Strategy s : strategies) {
    double msum = 0, nsum = 0;
    std::size_t mn = 0, nn = 0;
    for (std::size_t p = 0; p < 5; ++p) {
      for (std::size_t q = 0; q < 5; ++q) {
        for (const auto& t : tests[q]) {
          double d;
          if (s == Strategy::BestPerComparison) {
            d = 1e300;
            for (const auto& c : templ[p]) d = std::min(d, oracle::l2(c, t));
          } else {
            d = oracle::l2(template_for(s, p), t);
          }
          if (p == q) {
            msum += d;
            ++mn;
          } else {
            nsum += d;
            ++nn;
          }
        }
      }
    }
    const auto* row = r.row(s);
    REQUIRE(row != nullptr);
    CHECK(row->match_pairs == mn);
    CHECK(row->nonmatch_pairs == nn);
    CHECK(row->match_distance == doctest::Approx(msum / mn).epsilon(1e-12));
    CHECK(row->nonmatch_distance == doctest::Approx(nsum / nn).epsilon(1e-12));
  }
  CHECK(r.row(Strategy::Optimal)->oracle);
  CHECK_FALSE(r.row(Strategy::Mean)->oracle);
}

TEST_CASE("evaluate_strategies ordering and invariants on the synthetic suite") {
  SynthSpec spec;  // 50 persons x 30 images, dim 64
  const auto data = generate_dataset(spec);
  const std::vector<Strategy> all(std::begin(kAllStrategies), std::end(kAllStrategies));
  const auto r = evaluate_strategies(data.persons, all, SplitSpec{}, NonmatchSampling::full());
  CHECK(r.row(Strategy::Mean)->match_distance < r.row(Strategy::Baseline)->match_distance);
  CHECK(r.row(Strategy::Mean)->match_distance < r.row(Strategy::Min)->match_distance);
  CHECK(r.row(Strategy::Mean)->match_distance < r.row(Strategy::Max)->match_distance);

  const std::size_t base = 0;
  const std::size_t bpc = 8;
  for (const auto& pr : r.per_person) {
    CHECK(pr.per_strategy[bpc].match_mean <= pr.per_strategy[base].match_mean);
  }

  SUBCASE("sampled mode is deterministic given the seed") {
    const auto s1 = evaluate_strategies(data.persons, all, SplitSpec{},
                                        NonmatchSampling::sampled(30, 9));
    const auto s2 = evaluate_strategies(data.persons, all, SplitSpec{},
                                        NonmatchSampling::sampled(30, 9), 4);
    CHECK(s1.rows == s2.rows);
    CHECK(s1.row(Strategy::Mean)->nonmatch_pairs == 50 * 30);
  }
  SUBCASE("worker count does not change results") {
    const auto r4 = evaluate_strategies(data.persons, all, SplitSpec{}, NonmatchSampling::full(),
                                        4);
    CHECK(r4.rows == r.rows);
  }
}

TEST_CASE("tag filter covering every tag reproduces the unfiltered report") {
  SynthSpec spec;
  spec.n_persons = 6;
  spec.images_per_person = 12;
  spec.dim = 8;
  const auto data = generate_dataset(spec);
  const std::vector<Strategy> all(std::begin(kAllStrategies), std::end(kAllStrategies));
  SplitSpec plain;
  plain.n_template = 5;
  SplitSpec filtered = plain;
  filtered.template_tag_filter = TagSet{"synthetic"};
  const auto a = evaluate_strategies(data.persons, all, plain, NonmatchSampling::full());
  const auto b = evaluate_strategies(data.persons, all, filtered, NonmatchSampling::full());
  CHECK(a.rows == b.rows);
}

TEST_CASE("persons failing the split are skipped") {
  Dataset ds{gallery_of(12, 2, "a"), gallery_of(5, 2, "short"), gallery_of(12, 2, "b")};
  const std::vector<Strategy> s{Strategy::Mean};
  const auto r = evaluate_strategies(ds, s, SplitSpec{}, NonmatchSampling::full());
  CHECK(r.person_count == 2);
  REQUIRE(r.skipped.size() == 1);
  CHECK(r.skipped[0].person_id == "short");
  CHECK(r.rows.size() == 1);

  Dataset lonely{gallery_of(12, 2, "a"), gallery_of(3, 2, "b")};
  CHECK(code_of([&] { evaluate_strategies(lonely, s, SplitSpec{}, NonmatchSampling::full()); }) ==
        ErrorCode::InsufficientPersons);
}
