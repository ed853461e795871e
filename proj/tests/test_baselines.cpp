#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "dcom/baselines.hpp"
#include "support.hpp"

using namespace dcom;

TEST(Strategy, Names) {
  for (auto k : {StrategyKind::random, StrategyKind::margin, StrategyKind::entropy,
                 StrategyKind::maxprob, StrategyKind::coreset, StrategyKind::probcover,
                 StrategyKind::dcom}) {
    EXPECT_EQ(parse_strategy_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_strategy_kind("badge"), Error);
}

TEST(Random, ExhaustionAndDeterminism) {
  const auto pool = PoolState::all_unlabeled(9);
  const auto all = select_random(pool, 9, 1);
  EXPECT_EQ(std::set<Index>(all.begin(), all.end()).size(), 9u);
  EXPECT_EQ(select_random(pool, 4, 77), select_random(pool, 4, 77));
  EXPECT_THROW(select_random(pool, 10, 0), Error);
}

TEST(Random, UniformOverPool) {
  const auto pool = PoolState::all_unlabeled(4);
  std::vector<int> hits(4, 0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) ++hits[select_random(pool, 1, std::uint64_t(i))[0]];
  const double sigma = std::sqrt(draws * 0.25 * 0.75);
  for (int h : hits) EXPECT_LE(std::abs(h - draws * 0.25), 3 * sigma);
}

TEST(Uncertainty, MarginPicksSmallestGap) {
  const auto pool = PoolState::all_unlabeled(3);
  const SoftmaxMatrix probs(2, {0.9, 0.1, 0.55, 0.45, 0.7, 0.3});
  EXPECT_EQ(select_by_uncertainty(pool, probs, UncertaintyKind::margin, 1), (std::vector<Index>{1}));
  EXPECT_EQ(select_by_uncertainty(pool, probs, UncertaintyKind::margin, 3),
            (std::vector<Index>{1, 2, 0}));
}

TEST(Uncertainty, TiesGoToLowestIndex) {
  PoolState pool;
  pool.unlabeled = {7, 3, 5};
  pool.labeled = {0, 1, 2, 4, 6};
  const SoftmaxMatrix onehot(2, {1, 0, 0, 1, 1, 0});
  EXPECT_EQ(select_by_uncertainty(pool, onehot, UncertaintyKind::entropy, 2),
            (std::vector<Index>{3, 5}));
  EXPECT_THROW(select_by_uncertainty(pool, onehot, UncertaintyKind::gradnorm, 1), Error);
  EXPECT_THROW(select_by_uncertainty(pool, SoftmaxMatrix(2, {1, 0}), UncertaintyKind::margin, 1),
               Error);
}

TEST(Coreset, FarthestFirst) {
  const auto s = test::line({0.f, 1.f, 2.f});
  PoolState pool;
  pool.labeled = {0};
  pool.labels = {0};
  pool.deltas = {0.1};
  pool.unlabeled = {1, 2};
  EXPECT_EQ(select_coreset(s, pool, 2), (std::vector<Index>{2, 1}));

  const auto same = test::line({1.f, 1.f, 1.f, 1.f});
  EXPECT_EQ(select_coreset(same, PoolState::all_unlabeled(4), 2), (std::vector<Index>{0, 1}));
}

TEST(Coreset, CoveringRadiusNeverGrows) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = test::uniform_cloud(100, 3, rng());
    PoolState pool = PoolState::all_unlabeled(100);
    pool.labeled = {pool.unlabeled.front()};
    pool.unlabeled.erase(pool.unlabeled.begin());
    auto radius = [&](const std::vector<Index>& centres) {
      double worst = 0;
      for (std::size_t x = 0; x < s.size(); ++x) {
        double best = INFINITY;
        for (Index c : centres) best = std::min(best, distance(s, x, c));
        worst = std::max(worst, best);
      }
      return worst;
    };
    const double before = radius(pool.labeled);
    auto centres = pool.labeled;
    for (Index p : select_coreset(s, pool, 10)) {
      centres.push_back(p);
      EXPECT_LE(radius(centres), before);
    }
  }
}

TEST(ProbCover, ThreePointTrace) {
  const auto s = test::line({0.f, 0.4f, 0.8f});
  const auto pool = PoolState::all_unlabeled(3);
  EXPECT_EQ(select_probcover(s, pool, 0.5, 1), (std::vector<Index>{1}));
  EXPECT_EQ(select_probcover(s, pool, 0.5, 3), (std::vector<Index>{1, 0, 2}));
  EXPECT_THROW(select_probcover(s, pool, 0.5, 4), Error);
}

TEST(ProbCover, LabeledBallsAreAlreadyCovered) {
  const auto s = test::line({0.f, 0.1f, 0.2f, 5.f, 5.1f});
  PoolState pool;
  pool.labeled = {0};
  pool.labels = {0};
  pool.deltas = {0.3};
  pool.unlabeled = {1, 2, 3, 4};
  // Only the far pair still offers uncovered neighbours.
  EXPECT_EQ(select_probcover(s, pool, 0.3, 1), (std::vector<Index>{3}));
}
