#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "embagg/embedding.hpp"

namespace embagg {

enum class Strategy {
  Baseline,
  Mean,
  Median,
  Min,
  Max,
  Percentile25,
  Percentile75,
  Optimal,
  BestPerComparison,
};

inline constexpr Strategy kAllStrategies[] = {
    Strategy::Baseline,     Strategy::Mean,         Strategy::Median,
    Strategy::Min,          Strategy::Max,          Strategy::Percentile25,
    Strategy::Percentile75, Strategy::Optimal,      Strategy::BestPerComparison,
};

/// Oracle strategies consume the test images and are reported for
/// comparison only.
constexpr bool is_oracle(Strategy s) {
  return s == Strategy::Optimal || s == Strategy::BestPerComparison;
}

/// Strategies that reduce the template images dimension by dimension.
constexpr bool is_dimensionwise(Strategy s) {
  return s != Strategy::Baseline && !is_oracle(s);
}

/// Command-line key, e.g. "mean", "p25", "best-per-comp".
std::string_view strategy_key(Strategy s);
/// Row label used in rendered tables, e.g. "Avg", "25th percentile".
std::string_view strategy_label(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view key);

/// Linear interpolation between closest ranks at zero-based position
/// p * (n - 1) of the ascending-sorted `sorted`. Requires p in [0, 1].
double interpolated_quantile(std::span<const double> sorted, double p);

/// Dimension-wise reduction of `embs` under a non-oracle, non-baseline
/// strategy. Throws EmptyInput, DimensionMismatch, OracleStrategyMisuse
/// (also raised for Baseline, which is not a reduction).
Embedding aggregate(Strategy strategy, std::span<const Embedding> embs);

/// Incremental mean of a stream of embeddings. A value type: `updated`
/// returns the next state and leaves this one untouched.
class RollingMeanState {
 public:
  RollingMeanState() = default;

  /// mean' = mean + (x - mean) / (count + 1). Throws DimensionMismatch.
  [[nodiscard]] RollingMeanState updated(const Embedding& x) const;

  std::size_t count() const noexcept { return count_; }
  /// Absent until the first embedding is absorbed.
  const std::optional<Embedding>& mean() const noexcept { return mean_; }

 private:
  std::optional<Embedding> mean_;
  std::size_t count_ = 0;
};

inline RollingMeanState rolling_mean_update(const RollingMeanState& state,
                                            const Embedding& x) {
  return state.updated(x);
}

// Oracle strategies. They take the person's test images explicitly, so a
// production template can never reach them by accident.

/// Mean of the test embeddings. Minimizes the mean *squared* L2 distance to
/// the test set (not the mean L2 distance).
Embedding optimal_template(std::span<const Embedding> test_embs);

struct BestMatch {
  std::size_t index = 0;
  double distance = 0.0;
};

/// Candidate closest to `probe`; ties go to the lowest index.
BestMatch best_template_per_comparison(std::span<const Embedding> candidates,
                                       const Embedding& probe);

}  // namespace embagg
