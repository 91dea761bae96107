#include "embagg/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace embagg {

std::string_view strategy_key(Strategy s) {
  switch (s) {
    case Strategy::Baseline: return "baseline";
    case Strategy::Mean: return "mean";
    case Strategy::Median: return "median";
    case Strategy::Min: return "min";
    case Strategy::Max: return "max";
    case Strategy::Percentile25: return "p25";
    case Strategy::Percentile75: return "p75";
    case Strategy::Optimal: return "optimal";
    case Strategy::BestPerComparison: return "best-per-comp";
  }
  return "unknown";
}

std::string_view strategy_label(Strategy s) {
  switch (s) {
    case Strategy::Baseline: return "Baseline";
    case Strategy::Mean: return "Avg";
    case Strategy::Median: return "Median";
    case Strategy::Min: return "Min";
    case Strategy::Max: return "Max";
    case Strategy::Percentile25: return "25th percentile";
    case Strategy::Percentile75: return "75th percentile";
    case Strategy::Optimal: return "Optimal";
    case Strategy::BestPerComparison: return "Best template per comp";
  }
  return "Unknown";
}

std::optional<Strategy> parse_strategy(std::string_view key) {
  for (Strategy s : kAllStrategies) {
    if (strategy_key(s) == key) return s;
  }
  if (key == "avg" || key == "average") return Strategy::Mean;
  if (key == "percentile25") return Strategy::Percentile25;
  if (key == "percentile75") return Strategy::Percentile75;
  return std::nullopt;
}

double interpolated_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorCode::EmptyInput, "quantile of empty set");
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "quantile level outside [0, 1]");
  }
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo_idx = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo_idx);
  const double lo = sorted[lo_idx];
  if (frac == 0.0 || lo_idx + 1 >= sorted.size()) return lo;
  const double hi = sorted[lo_idx + 1];
  // Clamped so quantiles at increasing p never cross the order statistics.
  return std::clamp(lo + frac * (hi - lo), lo, hi);
}

namespace {

// Sum of an ascending-sorted column with Neumaier compensation. Summing the
// sorted column makes the mean independent of input order.
double compensated_sum(std::span<const double> xs) {
  double sum = 0.0;
  double comp = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

double reduce_sorted(Strategy strategy, std::span<const double> col) {
  switch (strategy) {
    case Strategy::Min: return col.front();
    case Strategy::Max: return col.back();
    case Strategy::Median: return interpolated_quantile(col, 0.5);
    case Strategy::Percentile25: return interpolated_quantile(col, 0.25);
    case Strategy::Percentile75: return interpolated_quantile(col, 0.75);
    case Strategy::Mean: {
      const double mean = compensated_sum(col) / static_cast<double>(col.size());
      return std::clamp(mean, col.front(), col.back());
    }
    default: break;
  }
  throw Error(ErrorCode::OracleStrategyMisuse,
              std::string(strategy_key(strategy)) + " is not a dimension-wise strategy");
}

}  // namespace

Embedding aggregate(Strategy strategy, std::span<const Embedding> embs) {
  if (!is_dimensionwise(strategy)) {
    throw Error(ErrorCode::OracleStrategyMisuse,
                std::string(strategy_key(strategy)) +
                    " cannot be computed from template images alone");
  }
  if (embs.empty()) throw Error(ErrorCode::EmptyInput, "no embeddings to aggregate");
  require_uniform_dim(embs);

  const std::size_t dim = embs.front().dim();
  std::vector<double> out(dim);
  std::vector<double> column(embs.size());
  for (std::size_t j = 0; j < dim; ++j) {
    for (std::size_t i = 0; i < embs.size(); ++i) column[i] = embs[i][j];
    std::sort(column.begin(), column.end());
    out[j] = reduce_sorted(strategy, column);
  }
  return EmbeddingBuilder::adopt(std::move(out));
}

RollingMeanState RollingMeanState::updated(const Embedding& x) const {
  RollingMeanState next;
  next.count_ = count_ + 1;
  if (!mean_) {
    next.mean_ = x;
    return next;
  }
  require_same_dim(*mean_, x);
  const double n = static_cast<double>(next.count_);
  std::vector<double> values(x.dim());
  for (std::size_t j = 0; j < x.dim(); ++j) {
    const double m = (*mean_)[j];
    values[j] = m + (x[j] - m) / n;
  }
  next.mean_ = EmbeddingBuilder::adopt(std::move(values));
  return next;
}

Embedding optimal_template(std::span<const Embedding> test_embs) {
  return aggregate(Strategy::Mean, test_embs);
}

BestMatch best_template_per_comparison(std::span<const Embedding> candidates,
                                       const Embedding& probe) {
  if (candidates.empty()) throw Error(ErrorCode::EmptyInput, "no candidate templates");
  BestMatch best{0, l2_distance(candidates[0], probe)};
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double d = l2_distance(candidates[i], probe);
    if (d < best.distance) best = {i, d};
  }
  return best;
}

}  // namespace embagg
