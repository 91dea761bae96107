#include <algorithm>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "embagg/aggregation.hpp"
#include "oracles.hpp"

using namespace embagg;

namespace {

std::vector<double> values_of(const Embedding& e) {
  return {e.values().begin(), e.values().end()};
}

std::vector<Embedding> shuffled(std::vector<Embedding> xs, Rng& rng) {
  for (std::size_t i = xs.size(); i > 1; --i) {
    std::swap(xs[i - 1], xs[rng.below(i)]);
  }
  return xs;
}

constexpr Strategy kReductions[] = {Strategy::Mean,         Strategy::Median,
                                    Strategy::Min,          Strategy::Max,
                                    Strategy::Percentile25, Strategy::Percentile75};

}  // namespace

TEST_CASE("aggregate examples") {
  const std::vector<Embedding> a{Embedding::of({1, 2}), Embedding::of({3, 4})};
  CHECK(values_of(aggregate(Strategy::Mean, a)) == std::vector<double>{2, 3});

  const std::vector<Embedding> b{Embedding::of({1, 5}), Embedding::of({3, 4})};
  CHECK(values_of(aggregate(Strategy::Max, b)) == std::vector<double>{3, 5});
  CHECK(values_of(aggregate(Strategy::Min, b)) == std::vector<double>{1, 4});

  const std::vector<Embedding> c{Embedding::of({1}), Embedding::of({2}), Embedding::of({10})};
  CHECK(values_of(aggregate(Strategy::Median, c)) == std::vector<double>{2});

  const std::vector<Embedding> even{Embedding::of({1}), Embedding::of({2}), Embedding::of({4}),
                                    Embedding::of({10})};
  CHECK(aggregate(Strategy::Median, even)[0] == 3.0);
}

TEST_CASE("aggregate errors") {
  const std::vector<Embedding> none;
  CHECK_THROWS_AS(aggregate(Strategy::Mean, none), Error);
  const std::vector<Embedding> mixed{Embedding::of({1, 2}), Embedding::of({1})};
  try {
    (void)aggregate(Strategy::Mean, mixed);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
  const std::vector<Embedding> one{Embedding::of({1})};
  for (Strategy s : {Strategy::Optimal, Strategy::BestPerComparison, Strategy::Baseline}) {
    try {
      (void)aggregate(s, one);
      FAIL("expected OracleStrategyMisuse");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::OracleStrategyMisuse);
    }
  }
}

TEST_CASE("percentile 25 matches sort-and-interpolate oracle") {
  Rng rng(derive_seed(25));
  const auto embs = oracle::random_embeddings(rng, 9, 512);
  const auto p25 = aggregate(Strategy::Percentile25, embs);
  const auto p75 = aggregate(Strategy::Percentile75, embs);
  for (std::size_t j = 0; j < 512; ++j) {
    std::vector<double> col;
    for (const auto& e : embs) col.push_back(e[j]);
    CHECK(p25[j] == doctest::Approx(oracle::quantile(col, 0.25)).epsilon(1e-12));
    CHECK(p75[j] == doctest::Approx(oracle::quantile(col, 0.75)).epsilon(1e-12));
  }
}

TEST_CASE("interpolated_quantile between ranks") {
  const std::vector<double> xs{0.0, 10.0, 20.0, 30.0, 40.0, 50.0};
  // position 0.25 * 5 = 1.25
  CHECK(interpolated_quantile(xs, 0.25) == doctest::Approx(12.5));
  CHECK(interpolated_quantile(xs, 0.0) == 0.0);
  CHECK(interpolated_quantile(xs, 1.0) == 50.0);
  CHECK_THROWS_AS(interpolated_quantile(xs, 1.5), Error);
}

TEST_CASE("strategy names round-trip") {
  for (Strategy s : kAllStrategies) {
    const auto parsed = parse_strategy(strategy_key(s));
    REQUIRE(parsed.has_value());
    CHECK(*parsed == s);
  }
  CHECK(is_oracle(Strategy::Optimal));
  CHECK(is_oracle(Strategy::BestPerComparison));
  CHECK_FALSE(is_oracle(Strategy::Mean));
  CHECK_FALSE(parse_strategy("geometric-median").has_value());
}

TEST_CASE("rolling mean update") {
  RollingMeanState s;
  CHECK(s.count() == 0);
  CHECK_FALSE(s.mean().has_value());
  const auto s1 = rolling_mean_update(s, Embedding::of({4, 6}));
  CHECK(s1.count() == 1);
  CHECK(values_of(*s1.mean()) == std::vector<double>{4, 6});
  const auto s2 = rolling_mean_update(s1, Embedding::of({0, 0}));
  CHECK(s2.count() == 2);
  CHECK(values_of(*s2.mean()) == std::vector<double>{2, 3});
  // the old state is a value and stays put
  CHECK(s1.count() == 1);
  CHECK_THROWS_AS(rolling_mean_update(s2, Embedding::of({1})), Error);
}

TEST_CASE("rolling mean over 50 embeddings equals batch mean") {
  Rng rng(derive_seed(50));
  const auto embs = oracle::random_embeddings(rng, 50, 128);
  RollingMeanState s;
  for (const auto& e : embs) s = s.updated(e);
  const auto batch = aggregate(Strategy::Mean, embs);
  CHECK(oracle::relative_norm_error(values_of(*s.mean()), values_of(batch)) <= 1e-9);
  CHECK(oracle::relative_norm_error(values_of(batch), oracle::mean(oracle::to_vecs(embs))) <=
        1e-12);
}

TEST_CASE("optimal template") {
  const std::vector<Embedding> two{Embedding::of({1, 1}), Embedding::of({3, 3})};
  CHECK(values_of(optimal_template(two)) == std::vector<double>{2, 2});
  const std::vector<Embedding> one{Embedding::of({0.25, -7})};
  CHECK(optimal_template(one) == one[0]);

  SUBCASE("no perturbation lowers the mean squared distance") {
    Rng rng(derive_seed(20));
    const auto tests = oracle::random_embeddings(rng, 20, 32);
    const auto opt = optimal_template(tests);
    const auto test_vecs = oracle::to_vecs(tests);
    const double best = oracle::mean_sq_distance(values_of(opt), test_vecs);
    for (int i = 0; i < 1000; ++i) {
      auto v = values_of(opt);
      const double scale = 1e-3 * static_cast<double>(1 + i % 100);
      for (auto& x : v) x += scale * rng.gaussian();
      CHECK(oracle::mean_sq_distance(v, test_vecs) >= best);
    }
  }
}

TEST_CASE("best template per comparison") {
  const std::vector<Embedding> cands{Embedding::of({0, 0}), Embedding::of({3, 4})};
  const auto r = best_template_per_comparison(cands, Embedding::of({3, 4}));
  CHECK(r.index == 1);
  CHECK(r.distance == 0.0);

  const std::vector<Embedding> single{Embedding::of({1, 2})};
  const auto p = Embedding::of({4, 6});
  const auto r1 = best_template_per_comparison(single, p);
  CHECK(r1.index == 0);
  CHECK(r1.distance == l2_distance(single[0], p));

  const std::vector<Embedding> ties{Embedding::of({1, 0}), Embedding::of({-1, 0})};
  CHECK(best_template_per_comparison(ties, Embedding::of({0, 0})).index == 0);

  const std::vector<Embedding> none;
  CHECK_THROWS_AS(best_template_per_comparison(none, p), Error);

  SUBCASE("exhaustive scan on seeded data") {
    Rng rng(derive_seed(10));
    for (int trial = 0; trial < 20; ++trial) {
      const auto cs = oracle::random_embeddings(rng, 10, 16);
      const auto probe = oracle::random_embedding(rng, 16);
      std::size_t want = 0;
      double want_d = oracle::l2(oracle::to_vec(cs[0]), oracle::to_vec(probe));
      for (std::size_t i = 1; i < cs.size(); ++i) {
        const double d = oracle::l2(oracle::to_vec(cs[i]), oracle::to_vec(probe));
        if (d < want_d) {
          want = i;
          want_d = d;
        }
      }
      const auto got = best_template_per_comparison(cs, probe);
      CHECK(got.index == want);
      CHECK(got.distance == doctest::Approx(want_d).epsilon(1e-12));
      for (const auto& c : cs) CHECK(got.distance <= l2_distance(c, probe));
    }
  }
}

TEST_CASE("aggregation properties on random sets") {
  Rng rng(derive_seed(99));
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(20);
    const std::size_t dim = 1 + rng.below(16);
    // Coarse values so ties and repeated coordinates are common.
    std::vector<Embedding> embs;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> v(dim);
      for (auto& x : v) x = std::round(rng.gaussian() * 4.0) / 4.0 + 0.1;
      embs.push_back(Embedding::validate(v, dim));
    }
    const auto perm = shuffled(embs, rng);
    for (Strategy s : kReductions) CHECK(aggregate(s, embs) == aggregate(s, perm));

    const auto mn = aggregate(Strategy::Min, embs);
    const auto p25 = aggregate(Strategy::Percentile25, embs);
    const auto med = aggregate(Strategy::Median, embs);
    const auto p75 = aggregate(Strategy::Percentile75, embs);
    const auto mx = aggregate(Strategy::Max, embs);
    const auto mean = aggregate(Strategy::Mean, embs);
    for (std::size_t j = 0; j < dim; ++j) {
      CHECK(mn[j] <= p25[j]);
      CHECK(p25[j] <= med[j]);
      CHECK(med[j] <= p75[j]);
      CHECK(p75[j] <= mx[j]);
      CHECK(mn[j] <= mean[j]);
      CHECK(mean[j] <= mx[j]);
    }

    const std::vector<Embedding> copies(n, embs[0]);
    for (Strategy s : kReductions) CHECK(aggregate(s, copies) == embs[0]);
    const std::vector<Embedding> single{embs[0]};
    for (Strategy s : kReductions) CHECK(aggregate(s, single) == embs[0]);
  }
}

TEST_CASE("mean of repeated 0.1 stays exact") {
  const std::vector<Embedding> copies(3, Embedding::of({0.1, 1.0 / 3.0}));
  CHECK(aggregate(Strategy::Mean, copies) == copies[0]);
}
