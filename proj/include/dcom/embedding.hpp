#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dcom/error.hpp"

namespace dcom {

using Index = std::uint32_t;
using Label = std::int32_t;

inline constexpr Label kUnknownLabel = -1;

namespace detail {
inline constexpr const char* kDatasetModule = "dataset-io";
}

/// n row-major vectors of dimension d with optional per-point class labels.
/// Values are stored as binary32 (the on-disk precision); every distance is
/// accumulated in double.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;

  EmbeddingSet(std::size_t count, std::size_t dim, std::vector<float> values,
               std::optional<std::vector<Label>> labels = std::nullopt)
      : count_(count), dim_(dim), values_(std::move(values)), labels_(std::move(labels)) {
    using detail::kDatasetModule;
    detail::require(dim_ > 0, Errc::InvalidArgument, kDatasetModule, "dimension must be positive");
    detail::require(count_ <= std::numeric_limits<std::size_t>::max() / dim_, Errc::Overflow,
                    kDatasetModule, "n*d overflows");
    detail::require(values_.size() == count_ * dim_, Errc::LengthMismatch, kDatasetModule,
                    "expected " + std::to_string(count_ * dim_) + " values, got " +
                        std::to_string(values_.size()));
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        throw Error(Errc::NonFinite, kDatasetModule,
                    "non-finite value at row " + std::to_string(i / dim_) + ", column " +
                        std::to_string(i % dim_));
      }
    }
    if (labels_) set_labels(std::move(*labels_));
  }

  std::size_t size() const noexcept { return count_; }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return count_ == 0; }

  std::span<const float> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  const std::vector<float>& values() const noexcept { return values_; }

  bool has_labels() const noexcept { return labels_.has_value(); }
  const std::vector<Label>& labels() const {
    detail::require(labels_.has_value(), Errc::InvalidArgument, detail::kDatasetModule,
                    "embedding set carries no labels");
    return *labels_;
  }
  Label label(std::size_t i) const { return labels()[i]; }

  /// One past the largest known label; zero when unlabeled.
  std::size_t num_classes() const {
    if (!labels_) return 0;
    Label top = -1;
    for (Label l : *labels_) top = std::max(top, l);
    return static_cast<std::size_t>(top + 1);
  }

  void set_labels(std::vector<Label> labels) {
    detail::require(labels.size() == count_, Errc::LengthMismatch, detail::kDatasetModule,
                    "label count " + std::to_string(labels.size()) + " != point count " +
                        std::to_string(count_));
    for (std::size_t i = 0; i < labels.size(); ++i) {
      detail::require(labels[i] >= kUnknownLabel, Errc::InvalidArgument, detail::kDatasetModule,
                      "negative label at index " + std::to_string(i));
    }
    labels_ = std::move(labels);
  }

  void clear_labels() noexcept { labels_.reset(); }

  /// Copy of the given rows (and their labels) in the given order.
  EmbeddingSet subset(std::span<const Index> indices) const {
    std::vector<float> values;
    values.reserve(indices.size() * dim_);
    std::optional<std::vector<Label>> labels;
    if (labels_) labels.emplace().reserve(indices.size());
    for (Index i : indices) {
      detail::require(i < count_, Errc::InvalidArgument, detail::kDatasetModule,
                      "subset index " + std::to_string(i) + " out of range");
      auto r = row(i);
      values.insert(values.end(), r.begin(), r.end());
      if (labels) labels->push_back((*labels_)[i]);
    }
    return EmbeddingSet(indices.size(), dim_, std::move(values), std::move(labels));
  }

  friend bool operator==(const EmbeddingSet&, const EmbeddingSet&) = default;

 private:
  std::size_t count_ = 0;
  std::size_t dim_ = 1;
  std::vector<float> values_;
  std::optional<std::vector<Label>> labels_;
};

// Distances. Every ball-membership decision in the library goes through
// squared_distance so that fast paths and brute-force checks agree bit for bit.

/// Sum of squared coordinate differences in double, four interleaved
/// accumulators combined as (s0 + s1) + (s2 + s3).
inline double squared_distance(std::span<const float> a, std::span<const float> b) {
  detail::require(a.size() == b.size(), Errc::DimensionMismatch, detail::kDatasetModule,
                  "distance between vectors of dimension " + std::to_string(a.size()) +
                      " and " + std::to_string(b.size()));
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t d = a.size();
  std::size_t i = 0;
  for (; i + 4 <= d; i += 4) {
    for (std::size_t j = 0; j < 4; ++j) {
      const double diff = static_cast<double>(a[i + j]) - static_cast<double>(b[i + j]);
      s[j] += diff * diff;
    }
  }
  for (std::size_t j = 0; i < d; ++i, ++j) {
    const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s[j] += diff * diff;
  }
  return (s[0] + s[1]) + (s[2] + s[3]);
}

/// Same value as squared_distance, or +inf once the running sum provably
/// exceeds `limit`. Partial sums of non-negative terms never decrease under
/// round-to-nearest, so the early exit cannot reject a pair the full sum
/// would keep.
inline double squared_distance_bounded(std::span<const float> a, std::span<const float> b,
                                       double limit) {
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t d = a.size();
  std::size_t i = 0;
  for (; i + 4 <= d; i += 4) {
    for (std::size_t j = 0; j < 4; ++j) {
      const double diff = static_cast<double>(a[i + j]) - static_cast<double>(b[i + j]);
      s[j] += diff * diff;
    }
    if ((i & 15) == 12 && (s[0] + s[1]) + (s[2] + s[3]) > limit) {
      return std::numeric_limits<double>::infinity();
    }
  }
  for (std::size_t j = 0; i < d; ++i, ++j) {
    const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s[j] += diff * diff;
  }
  return (s[0] + s[1]) + (s[2] + s[3]);
}

inline double euclidean_distance(std::span<const float> a, std::span<const float> b) {
  return std::sqrt(squared_distance(a, b));
}

/// Closed-ball membership: distance(a, b) <= radius.
inline bool within_radius(std::span<const float> a, std::span<const float> b, double radius) {
  return euclidean_distance(a, b) <= radius;
}

inline double distance(const EmbeddingSet& set, std::size_t i, std::size_t j) {
  return euclidean_distance(set.row(i), set.row(j));
}

/// Row-wise L2 normalization. Labels are carried over unchanged.
inline EmbeddingSet l2_normalize(const EmbeddingSet& set) {
  std::vector<float> out(set.values().size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    auto r = set.row(i);
    double norm2 = 0.0;
    for (float v : r) norm2 += static_cast<double>(v) * static_cast<double>(v);
    if (norm2 == 0.0) {
      throw Error(Errc::ZeroVector, detail::kDatasetModule,
                  "row " + std::to_string(i) + " has zero norm");
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t j = 0; j < r.size(); ++j) {
      out[i * set.dim() + j] = static_cast<float>(static_cast<double>(r[j]) * inv);
    }
  }
  std::optional<std::vector<Label>> labels;
  if (set.has_labels()) labels = set.labels();
  return EmbeddingSet(set.size(), set.dim(), std::move(out), std::move(labels));
}

struct MixtureSpec {
  std::size_t num_classes = 2;
  std::size_t points_per_class = 100;
  std::size_t dim = 2;
  double class_separation = 10.0;
  double within_std = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    using detail::kDatasetModule;
    detail::require(num_classes > 0 && points_per_class > 0 && dim > 0, Errc::InvalidArgument,
                    kDatasetModule, "mixture sizes must be positive");
    detail::require(class_separation > 0.0 && within_std > 0.0, Errc::InvalidArgument,
                    kDatasetModule, "mixture separation and spread must be positive");
  }
};

/// Mean of class c. With num_classes <= dim the means are the scaled axes
/// (class_separation / sqrt 2) * e_c, so every pair of classes sits exactly
/// class_separation apart. Further classes reuse the axes on outer shells of
/// radius class_separation * (c / dim + 1 / sqrt 2), which keeps every pair at
/// least that far apart.
/// In one dimension the means are c * class_separation.
inline std::vector<double> mixture_mean(const MixtureSpec& spec, std::size_t c) {
  std::vector<double> mean(spec.dim, 0.0);
  if (spec.dim == 1) {
    mean[0] = spec.class_separation * static_cast<double>(c);
    return mean;
  }
  mean[c % spec.dim] =
      spec.class_separation * (static_cast<double>(c / spec.dim) + 1.0 / std::sqrt(2.0));
  return mean;
}

/// Isotropic Gaussian mixture. Point i belongs to class i mod num_classes.
inline EmbeddingSet gen_gaussian_mixture(const MixtureSpec& spec) {
  spec.validate();
  const std::size_t n = spec.num_classes * spec.points_per_class;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.within_std);

  std::vector<std::vector<double>> means;
  means.reserve(spec.num_classes);
  for (std::size_t c = 0; c < spec.num_classes; ++c) means.push_back(mixture_mean(spec, c));

  std::vector<float> values(n * spec.dim);
  std::vector<Label> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % spec.num_classes;
    labels[i] = static_cast<Label>(c);
    for (std::size_t j = 0; j < spec.dim; ++j) {
      values[i * spec.dim + j] = static_cast<float>(means[c][j] + noise(rng));
    }
  }
  return EmbeddingSet(n, spec.dim, std::move(values), std::move(labels));
}

}  // namespace dcom
