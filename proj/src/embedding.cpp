#include "embagg/embedding.hpp"

#include <cmath>
#include <string>

namespace embagg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::OracleStrategyMisuse: return "OracleStrategyMisuse";
    case ErrorCode::TooFewImages: return "TooFewImages";
    case ErrorCode::EmptyTemplateAfterFilter: return "EmptyTemplateAfterFilter";
    case ErrorCode::InsufficientPersons: return "InsufficientPersons";
    case ErrorCode::NonPositiveInput: return "NonPositiveInput";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ManifestParseError: return "ManifestParseError";
    case ErrorCode::MatrixSizeMismatch: return "MatrixSizeMismatch";
    case ErrorCode::UnsupportedFormatVersion: return "UnsupportedFormatVersion";
    case ErrorCode::DuplicateSourceName: return "DuplicateSourceName";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::UsageError: return "UsageError";
  }
  return "Unknown";
}

namespace {

template <typename T>
Embedding validate_impl(std::span<const T> values, std::size_t expected_dim) {
  if (expected_dim == 0) {
    throw Error(ErrorCode::InvalidArgument, "embedding dimension must be positive");
  }
  if (values.size() != expected_dim) {
    throw Error(ErrorCode::DimensionMismatch,
                "expected " + std::to_string(expected_dim) + " values, got " +
                    std::to_string(values.size()));
  }
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = static_cast<double>(values[i]);
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::NonFiniteValue,
                  "element " + std::to_string(i) + " is not finite", i);
    }
    out[i] = v;
  }
  return EmbeddingBuilder::adopt(std::move(out));
}

}  // namespace

Embedding Embedding::validate(std::span<const double> values,
                              std::size_t expected_dim) {
  return validate_impl(values, expected_dim);
}

Embedding Embedding::validate(std::span<const float> values,
                              std::size_t expected_dim) {
  return validate_impl(values, expected_dim);
}

Embedding Embedding::of(std::initializer_list<double> values) {
  return validate(std::span<const double>(values.begin(), values.size()),
                  values.size());
}

MatchThreshold::MatchThreshold(double value) : value_(value) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw Error(ErrorCode::InvalidArgument,
                "match threshold must be finite and non-negative");
  }
}

void require_same_dim(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "dimension " + std::to_string(a.dim()) + " vs " +
                    std::to_string(b.dim()));
  }
}

void require_uniform_dim(std::span<const Embedding> embs) {
  for (const auto& e : embs) require_same_dim(embs.front(), e);
}

// Four independent accumulators; the accumulation order depends only on the
// coordinate index, and (a_i - b_i)^2 == (b_i - a_i)^2 bitwise, so the result
// is exactly symmetric.
double squared_l2_distance(const Embedding& a, const Embedding& b) {
  require_same_dim(a, b);
  const double* x = a.values().data();
  const double* y = b.values().data();
  const std::size_t n = a.dim();
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t lane = 0; lane < 4; ++lane) {
      const double d = x[i + lane] - y[i + lane];
      acc[lane] += d * d;
    }
  }
  for (; i < n; ++i) {
    const double d = x[i] - y[i];
    acc[0] += d * d;
  }
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

double l2_distance(const Embedding& a, const Embedding& b) {
  return std::sqrt(squared_l2_distance(a, b));
}

double l1_distance(const Embedding& a, const Embedding& b) {
  require_same_dim(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) sum += std::abs(a[i] - b[i]);
  return sum;
}

bool is_same_person(const Embedding& a, const Embedding& b, MatchThreshold t) {
  return l2_distance(a, b) <= t.value();
}

Embedding unit_normalized(const Embedding& e) {
  double norm_sq = 0.0;
  for (double v : e.values()) norm_sq += v * v;
  if (norm_sq == 0.0) {
    throw Error(ErrorCode::InvalidArgument, "cannot normalize the zero vector");
  }
  const double norm = std::sqrt(norm_sq);
  std::vector<double> out(e.dim());
  for (std::size_t i = 0; i < e.dim(); ++i) out[i] = e[i] / norm;
  return EmbeddingBuilder::adopt(std::move(out));
}

}  // namespace embagg
