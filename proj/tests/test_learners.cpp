#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dcom/learners.hpp"
#include "support.hpp"

using namespace dcom;

namespace {

// 20 points, two classes split by the line x + y = 0 with a margin of 0.5.
struct Separable {
  EmbeddingSet set;
  std::vector<LabeledPoint> points;
};

Separable separable() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(-2.f, 2.f);
  std::vector<float> v;
  std::vector<Label> labels;
  while (labels.size() < 20) {
    const float x = u(rng), y = u(rng);
    if (std::abs(x + y) < 0.5f) continue;
    const Label want = labels.size() % 2;
    if (Label(x + y > 0) != want) continue;
    v.push_back(x);
    v.push_back(y);
    labels.push_back(want);
  }
  Separable s{EmbeddingSet(20, 2, v, labels), {}};
  for (Index i = 0; i < 20; ++i) s.points.push_back({i, labels[i]});
  return s;
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

}  // namespace

TEST(Learner, SeparableTrainingAccuracy) {
  const auto s = separable();
  // Witness: the separating line itself classifies every point.
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_EQ(Label(s.set.row(i)[0] + s.set.row(i)[1] > 0), s.set.label(i));
  }
  std::vector<Index> all(20);
  std::iota(all.begin(), all.end(), Index{0});
  for (auto kind : {LearnerKind::linear_probe, LearnerKind::nearest_class_mean}) {
    LearnerSpec spec;
    spec.kind = kind;
    const auto l = train_learner(s.set, s.points, spec);
    const auto pred = predict_labels(l, s.set, all);
    if (kind == LearnerKind::linear_probe) EXPECT_EQ(pred, s.set.labels());
    const auto probs = predict_softmax(l, s.set, all);
    for (std::size_t i = 0; i < probs.rows(); ++i) {
      double sum = 0;
      for (double p : probs.row(i)) {
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, 1.0);
        sum += p;
      }
      EXPECT_NEAR(sum, 1.0, 1e-6);
    }
  }
}

TEST(Learner, SingleClassAndDeterminism) {
  const auto s = separable();
  std::vector<LabeledPoint> one{{0, 0}, {2, 0}};
  try {
    train_learner(s.set, one, LearnerSpec{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SingleClass);
  }
  const auto a = train_learner(s.set, s.points, LearnerSpec{});
  const auto b = train_learner(s.set, s.points, LearnerSpec{});
  EXPECT_EQ(a.probe_params(), b.probe_params());
}

TEST(Learner, LossDecreasesEveryEpoch) {
  MixtureSpec spec;
  spec.num_classes = 3;
  spec.points_per_class = 30;
  spec.dim = 5;
  spec.class_separation = 2.0;
  const auto set = gen_gaussian_mixture(spec);
  std::vector<LabeledPoint> pts;
  for (Index i = 0; i < set.size(); ++i) pts.push_back({i, set.label(i)});
  // Raw (unnormalized) rows with the default rate: the curvature cap keeps descent monotone.
  LearnerSpec ls;
  ls.epochs = 200;
  const auto l = train_learner(set, pts, ls);
  const auto& h = l.loss_history();
  ASSERT_EQ(h.size(), 201u);
  for (std::size_t i = 1; i < h.size(); ++i) EXPECT_LE(h[i], h[i - 1] + 1e-9);
  EXPECT_LT(h.back(), h.front());
}

TEST(Learner, GradientMatchesFiniteDifferences) {
  const EmbeddingSet set(6, 2, {0.5f, 1.0f, -1.0f, 0.2f, 0.3f, -0.7f, 1.5f, 0.1f, -0.4f, -0.9f, 0.8f, 0.6f});
  const std::vector<LabeledPoint> pts{{0, 0}, {1, 1}, {2, 2}, {3, 0}, {4, 1}, {5, 2}};
  probe::Params p(3, 2);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 0.5);
  for (double& w : p.weights) w = g(rng);
  for (double& b : p.bias) b = g(rng);
  const double l2 = 0.01, h = 1e-5;
  const auto grad = probe::gradient(p, set, pts, l2);
  auto check = [&](std::vector<double>& params, const std::vector<double>& analytic) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double keep = params[i];
      params[i] = keep + h;
      const double up = probe::loss(p, set, pts, l2);
      params[i] = keep - h;
      const double down = probe::loss(p, set, pts, l2);
      params[i] = keep;
      EXPECT_LE(relative_error((up - down) / (2 * h), analytic[i]), 1e-4) << i;
    }
  };
  check(p.weights, grad.weights);
  check(p.bias, grad.bias);
}

TEST(Learner, NearestClassMeanTemperatureLimit) {
  const auto s = separable();
  LearnerSpec spec;
  spec.kind = LearnerKind::nearest_class_mean;
  spec.temperature = 1e12;
  const auto l = train_learner(s.set, s.points, spec);
  std::vector<Index> all(20);
  std::iota(all.begin(), all.end(), Index{0});
  const auto probs = predict_softmax(l, s.set, all);
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    for (double p : probs.row(i)) EXPECT_NEAR(p, 0.5, 1e-9);
  }
}

TEST(Learner, DimensionMismatch) {
  const auto s = separable();
  const auto l = train_learner(s.set, s.points, LearnerSpec{});
  const auto other = test::uniform_cloud(3, 4, 0);
  const std::vector<Index> t{0};
  EXPECT_THROW(predict_softmax(l, other, t), Error);
}

TEST(Uncertainty, Examples) {
  const SoftmaxMatrix row(3, {0.6, 0.3, 0.1});
  EXPECT_NEAR(uncertainty_scores(row, UncertaintyKind::margin)[0], 0.3, 1e-12);
  EXPECT_NEAR(uncertainty_scores(row, UncertaintyKind::maxprob)[0], 0.4, 1e-12);
  const double h = -(0.6 * std::log(0.6) + 0.3 * std::log(0.3) + 0.1 * std::log(0.1));
  EXPECT_NEAR(uncertainty_scores(row, UncertaintyKind::entropy)[0], h, 1e-12);
  EXPECT_NEAR(uncertainty_scores(row, UncertaintyKind::entropy)[0], 0.898, 1e-3);

  const SoftmaxMatrix uniform(4, {0.25, 0.25, 0.25, 0.25});
  EXPECT_EQ(uncertainty_scores(uniform, UncertaintyKind::margin)[0], 0.0);
  EXPECT_NEAR(uncertainty_scores(uniform, UncertaintyKind::entropy)[0], std::log(4.0), 1e-12);

  try {
    uncertainty_scores(row, UncertaintyKind::gradnorm);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::IncompatibleLearner);
  }
}

TEST(Uncertainty, InvariantUnderClassPermutation) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> p(5);
    double sum = 0;
    for (double& x : p) sum += (x = u(rng));
    for (double& x : p) x /= sum;
    auto q = p;
    std::shuffle(q.begin(), q.end(), rng);
    for (auto kind : {UncertaintyKind::margin, UncertaintyKind::entropy, UncertaintyKind::maxprob}) {
      const double a = uncertainty_scores(SoftmaxMatrix(5, p), kind)[0];
      const double b = uncertainty_scores(SoftmaxMatrix(5, q), kind)[0];
      EXPECT_NEAR(a, b, 1e-12);
    }
  }
}

TEST(Uncertainty, GradNormWithProbe) {
  const auto s = separable();
  const auto l = train_learner(s.set, s.points, LearnerSpec{});
  const std::vector<Index> t{0, 1};
  const auto probs = predict_softmax(l, s.set, t);
  const GradientContext ctx{l, s.set, t};
  const auto g = uncertainty_scores(probs, UncertaintyKind::gradnorm, &ctx);
  ASSERT_EQ(g.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto r = probs.row(i);
    const double top = std::max(r[0], r[1]);
    const double x2 = 1.0 + double(s.set.row(t[i])[0]) * s.set.row(t[i])[0] +
                      double(s.set.row(t[i])[1]) * s.set.row(t[i])[1];
    EXPECT_NEAR(g[i], std::sqrt(2.0) * (1.0 - top) * std::sqrt(x2), 1e-12);
  }
}

TEST(Normalize, UnitInterval) {
  EXPECT_EQ(normalize_unit_interval(std::vector<double>{2, 4, 6}), (std::vector<double>{0, 0.5, 1}));
  EXPECT_EQ(normalize_unit_interval(std::vector<double>{5, 5, 5}), (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(normalize_unit_interval(std::vector<double>{0, 0.3, 1}), (std::vector<double>{0, 0.3, 1}));
  EXPECT_THROW(normalize_unit_interval({}), Error);
}

TEST(NormalizedNearestNeighbour, Examples) {
  const auto s = test::line({0.f, 1.f, 0.6f});
  const std::vector<LabeledPoint> l{{0, 0}, {1, 1}};
  EXPECT_EQ(nnn_classify(s, l, std::vector<double>{1.0, 0.25}, 2), 0);
  EXPECT_EQ(nnn_classify(s, l, std::vector<double>{1.0, 0.25}, 1), 1);
  EXPECT_THROW(nnn_classify(s, {}, {}, 2), Error);
}

TEST(NormalizedNearestNeighbour, UniformRadiiReduceToOneNearestNeighbour) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 30;
    const auto s = test::uniform_cloud(n, 3, rng());
    std::vector<LabeledPoint> l;
    for (Index i = 0; i < 8; ++i) l.push_back({i, Label(rng() % 3)});
    const std::vector<double> d(l.size(), 0.1 + double(rng() % 100) / 50.0);
    for (std::size_t q = 8; q < n; ++q) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < l.size(); ++i) {
        if (distance(s, q, l[i].index) < distance(s, q, l[best].index)) best = i;
      }
      EXPECT_EQ(nnn_classify(s, l, d, q), l[best].label);
    }
  }
}
