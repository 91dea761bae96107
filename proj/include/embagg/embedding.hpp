#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "embagg/error.hpp"

namespace embagg {

/// A face embedding: a fixed-length vector of finite reals.
///
/// Coordinates are held as double regardless of how they were stored on
/// disk. Instances can only be created through `Embedding::validate` (or the
/// library's own arithmetic), so every live Embedding is finite and non-empty.
class Embedding {
 public:
  /// Checks that `values` has `expected_dim` entries, all finite.
  /// Throws DimensionMismatch or NonFiniteValue (with the element index).
  static Embedding validate(std::span<const double> values,
                            std::size_t expected_dim);
  static Embedding validate(std::span<const float> values,
                            std::size_t expected_dim);

  /// Convenience for tests and literals; dim is taken from the input.
  static Embedding of(std::initializer_list<double> values);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  friend class EmbeddingBuilder;
  explicit Embedding(std::vector<double> values) : values_(std::move(values)) {}

  std::vector<double> values_;
};

/// Internal construction path for results of library arithmetic whose
/// finiteness follows from finite inputs.
class EmbeddingBuilder {
 public:
  static Embedding adopt(std::vector<double> values) {
    return Embedding(std::move(values));
  }
};

/// Non-negative decision threshold in L2 distance units.
class MatchThreshold {
 public:
  /// Throws InvalidArgument for negative or non-finite values.
  explicit MatchThreshold(double value);
  double value() const noexcept { return value_; }

 private:
  double value_;
};

void require_same_dim(const Embedding& a, const Embedding& b);
void require_uniform_dim(std::span<const Embedding> embs);

/// Euclidean distance, sqrt(sum_i (a_i - b_i)^2).
double l2_distance(const Embedding& a, const Embedding& b);

/// Sum of squared coordinate differences.
double squared_l2_distance(const Embedding& a, const Embedding& b);

/// Coordinate-wise absolute difference sum.
double l1_distance(const Embedding& a, const Embedding& b);

/// True iff l2_distance(a, b) <= t (inclusive).
bool is_same_person(const Embedding& a, const Embedding& b, MatchThreshold t);

/// Scales to unit L2 norm. Never applied implicitly anywhere in the toolkit.
/// Throws InvalidArgument for the zero vector.
Embedding unit_normalized(const Embedding& e);

}  // namespace embagg
