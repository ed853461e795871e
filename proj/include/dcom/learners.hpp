#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dcom/embedding.hpp"

namespace dcom {

namespace detail {
inline constexpr const char* kLearnersModule = "learners";
}

struct LabeledPoint {
  Index index;
  Label label;
  friend bool operator==(const LabeledPoint&, const LabeledPoint&) = default;
};

/// Row-major class probabilities, one row per scored point.
class SoftmaxMatrix {
 public:
  SoftmaxMatrix() = default;
  SoftmaxMatrix(std::size_t rows, std::size_t classes)
      : rows_(rows), classes_(classes), values_(rows * classes, 0.0) {}
  SoftmaxMatrix(std::size_t classes, std::vector<double> values)
      : rows_(classes ? values.size() / classes : 0), classes_(classes), values_(std::move(values)) {
    detail::require(classes_ > 0 && values_.size() == rows_ * classes_, Errc::LengthMismatch,
                    detail::kLearnersModule, "probability buffer is not rows x classes");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t class_count() const noexcept { return classes_; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * classes_, classes_}; }
  std::span<double> row(std::size_t i) { return {values_.data() + i * classes_, classes_}; }

  Label argmax(std::size_t i) const {
    auto r = row(i);
    return static_cast<Label>(std::max_element(r.begin(), r.end()) - r.begin());
  }

 private:
  std::size_t rows_ = 0;
  std::size_t classes_ = 0;
  std::vector<double> values_;
};

enum class LearnerKind { linear_probe, nearest_class_mean };

inline std::string_view to_string(LearnerKind k) {
  return k == LearnerKind::linear_probe ? "linear_probe" : "nearest_class_mean";
}

struct LearnerSpec {
  LearnerKind kind = LearnerKind::linear_probe;
  /// Capped during training at 1 / (curvature bound), about 1 for unit-norm rows.
  double learning_rate = 1.0;
  std::size_t epochs = 1000;
  double l2_penalty = 1e-4;
  /// Softmax temperature over negative squared distances (nearest_class_mean).
  double temperature = 1.0;
  /// Both learners are deterministic functions of their data; the seed is
  /// carried for configs that vary it per repetition.
  std::uint64_t seed = 0;

  void validate() const {
    using detail::kLearnersModule;
    detail::require(learning_rate > 0.0, Errc::InvalidArgument, kLearnersModule,
                    "learning_rate must be positive");
    detail::require(epochs > 0, Errc::InvalidArgument, kLearnersModule, "epochs must be positive");
    detail::require(l2_penalty >= 0.0, Errc::InvalidArgument, kLearnersModule,
                    "l2_penalty must be non-negative");
    detail::require(temperature > 0.0, Errc::InvalidArgument, kLearnersModule,
                    "temperature must be positive");
  }
};

namespace probe {

/// Multinomial logistic regression parameters: weights are classes x dim,
/// row-major, plus one bias per class.
struct Params {
  std::size_t classes = 0;
  std::size_t dim = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  Params() = default;
  Params(std::size_t c, std::size_t d) : classes(c), dim(d), weights(c * d, 0.0), bias(c, 0.0) {}
  friend bool operator==(const Params&, const Params&) = default;
};

inline void softmax_inplace(std::span<double> z) {
  const double top = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - top);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

inline void logits(const Params& p, std::span<const float> x, std::span<double> out) {
  for (std::size_t c = 0; c < p.classes; ++c) {
    double z = p.bias[c];
    const double* w = p.weights.data() + c * p.dim;
    for (std::size_t j = 0; j < p.dim; ++j) z += w[j] * static_cast<double>(x[j]);
    out[c] = z;
  }
}

/// Mean cross-entropy over the labelled points plus (l2 / 2) * ||W||^2.
inline double loss(const Params& p, const EmbeddingSet& set, std::span<const LabeledPoint> data,
                   double l2) {
  std::vector<double> z(p.classes);
  double total = 0.0;
  for (const auto& lp : data) {
    logits(p, set.row(lp.index), z);
    const double top = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - top);
    total += (top + std::log(sum)) - z[lp.label];
  }
  double reg = 0.0;
  for (double w : p.weights) reg += w * w;
  return total / static_cast<double>(data.size()) + 0.5 * l2 * reg;
}

inline Params gradient(const Params& p, const EmbeddingSet& set, std::span<const LabeledPoint> data,
                       double l2) {
  Params g(p.classes, p.dim);
  std::vector<double> z(p.classes);
  const double scale = 1.0 / static_cast<double>(data.size());
  for (const auto& lp : data) {
    auto x = set.row(lp.index);
    logits(p, x, z);
    softmax_inplace(z);
    z[lp.label] -= 1.0;
    for (std::size_t c = 0; c < p.classes; ++c) {
      const double r = z[c] * scale;
      g.bias[c] += r;
      double* gw = g.weights.data() + c * p.dim;
      for (std::size_t j = 0; j < p.dim; ++j) gw[j] += r * static_cast<double>(x[j]);
    }
  }
  for (std::size_t i = 0; i < g.weights.size(); ++i) g.weights[i] += l2 * p.weights[i];
  return g;
}

/// Upper bound on the loss curvature: the softmax cross-entropy Hessian in the
/// logits is at most 1/2, and each point maps a parameter step of norm 1 to a
/// logit step of norm at most sqrt(||x||^2 + 1).
inline double curvature_bound(const EmbeddingSet& set, std::span<const LabeledPoint> data, double l2) {
  double widest = 0.0;
  for (const auto& lp : data) {
    double s = 1.0;
    for (float v : set.row(lp.index)) s += static_cast<double>(v) * v;
    widest = std::max(widest, s);
  }
  return 0.5 * widest + l2;
}

}  // namespace probe

/// A trained classifier. Immutable once built.
class Learner {
 public:
  enum class Model { linear_probe, nearest_class_mean, constant };

  Model model() const noexcept { return model_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t class_count() const noexcept { return classes_; }
  const probe::Params& probe_params() const noexcept { return params_; }
  /// Training objective before the first step and after every epoch.
  const std::vector<double>& loss_history() const noexcept { return loss_history_; }

  /// Predicts `label` with probability one; stands in for a classifier when
  /// the labelled set holds a single class.
  static Learner constant(Label label, std::size_t classes, std::size_t dim) {
    Learner l;
    l.model_ = Model::constant;
    l.classes_ = classes;
    l.dim_ = dim;
    l.constant_label_ = label;
    return l;
  }

  void probabilities(std::span<const float> x, std::span<double> out) const {
    switch (model_) {
      case Model::linear_probe:
        probe::logits(params_, x, out);
        probe::softmax_inplace(out);
        return;
      case Model::nearest_class_mean: {
        for (std::size_t c = 0; c < classes_; ++c) {
          if (!present_[c]) {
            out[c] = -std::numeric_limits<double>::infinity();
            continue;
          }
          double s = 0.0;
          for (std::size_t j = 0; j < dim_; ++j) {
            const double diff = static_cast<double>(x[j]) - means_[c * dim_ + j];
            s += diff * diff;
          }
          out[c] = -s / temperature_;
        }
        probe::softmax_inplace(out);
        return;
      }
      case Model::constant:
        std::fill(out.begin(), out.end(), 0.0);
        out[constant_label_] = 1.0;
        return;
    }
  }

 private:
  friend Learner train_learner(const EmbeddingSet&, std::span<const LabeledPoint>,
                               const LearnerSpec&, std::size_t);

  Model model_ = Model::linear_probe;
  std::size_t dim_ = 0;
  std::size_t classes_ = 0;
  probe::Params params_;
  std::vector<double> loss_history_;
  std::vector<double> means_;
  std::vector<bool> present_;
  double temperature_ = 1.0;
  Label constant_label_ = 0;
};

/// Trains from scratch. `num_classes` fixes the output width; zero means one
/// past the largest label seen.
inline Learner train_learner(const EmbeddingSet& set, std::span<const LabeledPoint> labeled,
                             const LearnerSpec& spec, std::size_t num_classes = 0) {
  using detail::kLearnersModule;
  spec.validate();
  detail::require(!labeled.empty(), Errc::EmptyInput, kLearnersModule, "no labelled points");
  Label top = -1;
  bool two_classes = false;
  for (const auto& lp : labeled) {
    detail::require(lp.index < set.size(), Errc::InvalidArgument, kLearnersModule,
                    "labelled index out of range");
    detail::require(lp.label >= 0, Errc::InvalidArgument, kLearnersModule,
                    "training labels must be known");
    top = std::max(top, lp.label);
    if (lp.label != labeled.front().label) two_classes = true;
  }
  if (!two_classes) {
    throw Error(Errc::SingleClass, kLearnersModule,
                "labelled set holds only class " + std::to_string(labeled.front().label));
  }
  const std::size_t classes = num_classes == 0 ? static_cast<std::size_t>(top + 1) : num_classes;
  detail::require(static_cast<std::size_t>(top) < classes, Errc::InvalidArgument, kLearnersModule,
                  "label exceeds num_classes");

  Learner l;
  l.dim_ = set.dim();
  l.classes_ = classes;
  if (spec.kind == LearnerKind::linear_probe) {
    l.model_ = Learner::Model::linear_probe;
    l.params_ = probe::Params(classes, set.dim());
    l.loss_history_.reserve(spec.epochs + 1);
    l.loss_history_.push_back(probe::loss(l.params_, set, labeled, spec.l2_penalty));
    // Steps above 1 / curvature could overshoot, so the rate is capped there
    // and every epoch is a descent step whatever the input scale.
    const double step = std::min(spec.learning_rate,
                                 1.0 / probe::curvature_bound(set, labeled, spec.l2_penalty));
    for (std::size_t e = 0; e < spec.epochs; ++e) {
      auto g = probe::gradient(l.params_, set, labeled, spec.l2_penalty);
      for (std::size_t i = 0; i < g.weights.size(); ++i) l.params_.weights[i] -= step * g.weights[i];
      for (std::size_t c = 0; c < classes; ++c) l.params_.bias[c] -= step * g.bias[c];
      l.loss_history_.push_back(probe::loss(l.params_, set, labeled, spec.l2_penalty));
    }
  } else {
    l.model_ = Learner::Model::nearest_class_mean;
    l.temperature_ = spec.temperature;
    l.means_.assign(classes * set.dim(), 0.0);
    l.present_.assign(classes, false);
    std::vector<std::size_t> counts(classes, 0);
    for (const auto& lp : labeled) {
      auto x = set.row(lp.index);
      for (std::size_t j = 0; j < set.dim(); ++j) l.means_[lp.label * set.dim() + j] += x[j];
      ++counts[lp.label];
    }
    for (std::size_t c = 0; c < classes; ++c) {
      if (counts[c] == 0) continue;
      l.present_[c] = true;
      for (std::size_t j = 0; j < set.dim(); ++j) {
        l.means_[c * set.dim() + j] /= static_cast<double>(counts[c]);
      }
    }
  }
  return l;
}

inline SoftmaxMatrix predict_softmax(const Learner& learner, const EmbeddingSet& set,
                                     std::span<const Index> targets) {
  detail::require(learner.dim() == set.dim(), Errc::DimensionMismatch, detail::kLearnersModule,
                  "learner trained on dimension " + std::to_string(learner.dim()) +
                      ", data has " + std::to_string(set.dim()));
  SoftmaxMatrix out(targets.size(), learner.class_count());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    detail::require(targets[i] < set.size(), Errc::InvalidArgument, detail::kLearnersModule,
                    "target index out of range");
    learner.probabilities(set.row(targets[i]), out.row(i));
  }
  return out;
}

inline std::vector<Label> predict_labels(const Learner& learner, const EmbeddingSet& set,
                                         std::span<const Index> targets) {
  auto probs = predict_softmax(learner, set, targets);
  std::vector<Label> out(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) out[i] = probs.argmax(i);
  return out;
}

enum class UncertaintyKind { margin, entropy, maxprob, gradnorm };

inline std::string_view to_string(UncertaintyKind k) {
  switch (k) {
    case UncertaintyKind::margin: return "margin";
    case UncertaintyKind::entropy: return "entropy";
    case UncertaintyKind::maxprob: return "maxprob";
    case UncertaintyKind::gradnorm: return "gradnorm";
  }
  return "unknown";
}

/// Inputs the gradient-norm score needs beyond the probabilities.
struct GradientContext {
  const Learner& learner;
  const EmbeddingSet& set;
  std::span<const Index> targets;
};

/// Per-row scores. margin is the top-two gap (lower = more uncertain);
/// entropy is -sum p ln p; maxprob is 1 - max p; gradnorm is the norm of the
/// cross-entropy gradient w.r.t. the probe's output layer (weights and bias)
/// with the argmax taken as label, i.e. ||p - e_argmax|| * sqrt(||x||^2 + 1).
inline std::vector<double> uncertainty_scores(const SoftmaxMatrix& probs, UncertaintyKind kind,
                                              const GradientContext* grad = nullptr) {
  std::vector<double> out(probs.rows());
  if (kind == UncertaintyKind::gradnorm) {
    if (grad == nullptr || grad->learner.model() != Learner::Model::linear_probe) {
      throw Error(Errc::IncompatibleLearner, detail::kLearnersModule,
                  "gradnorm needs a linear-probe learner");
    }
    detail::require(grad->targets.size() == probs.rows(), Errc::LengthMismatch,
                    detail::kLearnersModule, "gradnorm targets do not match probability rows");
  }
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    auto r = probs.row(i);
    switch (kind) {
      case UncertaintyKind::margin: {
        double first = 0.0, second = 0.0;
        for (double p : r) {
          if (p > first) {
            second = first;
            first = p;
          } else if (p > second) {
            second = p;
          }
        }
        out[i] = first - second;
        break;
      }
      case UncertaintyKind::entropy: {
        double h = 0.0;
        for (double p : r) {
          if (p > 0.0) h -= p * std::log(p);
        }
        out[i] = std::max(0.0, h);
        break;
      }
      case UncertaintyKind::maxprob:
        out[i] = 1.0 - *std::max_element(r.begin(), r.end());
        break;
      case UncertaintyKind::gradnorm: {
        const auto top = static_cast<std::size_t>(probs.argmax(i));
        double residual = 0.0;
        for (std::size_t c = 0; c < r.size(); ++c) {
          const double e = r[c] - (c == top ? 1.0 : 0.0);
          residual += e * e;
        }
        double x2 = 1.0;
        for (float v : grad->set.row(grad->targets[i])) x2 += static_cast<double>(v) * v;
        out[i] = std::sqrt(residual * x2);
        break;
      }
    }
  }
  return out;
}

/// Min-max normalization to [0, 1]; constant input maps to all zeros.
inline std::vector<double> normalize_unit_interval(std::span<const double> scores) {
  detail::require(!scores.empty(), Errc::EmptyInput, detail::kLearnersModule,
                  "nothing to normalize");
  const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
  const double lo = *lo_it, hi = *hi_it;
  detail::require(std::isfinite(lo) && std::isfinite(hi), Errc::NonFinite,
                  detail::kLearnersModule, "scores must be finite");
  std::vector<double> out(scores.size(), 0.0);
  if (hi == lo) return out;
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - lo) / (hi - lo);
  return out;
}

/// Normalized nearest neighbour: label of argmin_i distance(query, x_i) / delta_i,
/// lowest dataset index on ties.
inline Label nnn_classify(const EmbeddingSet& set, std::span<const LabeledPoint> labeled,
                          std::span<const double> deltas, std::size_t query) {
  using detail::kLearnersModule;
  detail::require(!labeled.empty(), Errc::EmptyInput, kLearnersModule, "no labelled points");
  detail::require(labeled.size() == deltas.size(), Errc::LengthMismatch, kLearnersModule,
                  "one radius per labelled point required");
  double best = std::numeric_limits<double>::infinity();
  Index best_index = std::numeric_limits<Index>::max();
  Label best_label = kUnknownLabel;
  auto q = set.row(query);
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    detail::require(deltas[i] > 0.0, Errc::InvalidArgument, kLearnersModule,
                    "radii must be positive");
    const double ratio = euclidean_distance(q, set.row(labeled[i].index)) / deltas[i];
    if (ratio < best || (ratio == best && labeled[i].index < best_index)) {
      best = ratio;
      best_index = labeled[i].index;
      best_label = labeled[i].label;
    }
  }
  return best_label;
}

}  // namespace dcom
