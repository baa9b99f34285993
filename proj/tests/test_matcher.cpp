#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <numeric>

#include "matchx/errors.hpp"
#include "matchx/matcher.hpp"
#include "matchx/rng.hpp"

namespace matchx {
namespace {

DistanceMatrix dm(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix v(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double x : r) v(i, j++) = x;
    ++i;
  }
  return {v, Metric::euclidean};
}

DistanceMatrix random_dm(Rng& rng, std::size_t n, std::size_t m) {
  Matrix v(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) v(i, j) = rng.uniform();
  }
  return {v, Metric::euclidean};
}

// Independent oracle: minimum over all injective maps of a row subset to
// columns, enumerated with next_permutation over column orderings.
double enumerate_min(const DistanceMatrix& d, std::size_t k) {
  std::vector<std::size_t> cols(d.cols());
  std::iota(cols.begin(), cols.end(), std::size_t{0});
  std::vector<char> pick(d.rows(), 0);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(k), 1);
  double best = std::numeric_limits<double>::infinity();
  do {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < d.rows(); ++i) {
      if (pick[i]) rows.push_back(i);
    }
    std::sort(cols.begin(), cols.end());
    do {
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) s += d(rows[t], cols[t]);
      best = std::min(best, s);
    } while (std::next_permutation(cols.begin(), cols.end()));
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

void expect_margins(const Correspondence& c, std::size_t k) {
  ASSERT_EQ(c.pairs.size(), k);
  EXPECT_EQ(c.left_nodes().size(), k);   // NodeSet rejects duplicates
  EXPECT_EQ(c.right_nodes().size(), k);
  double sum = 0.0;
  for (const auto& p : c.pairs) sum += p.distance;
  EXPECT_NEAR(c.total_distance, sum, 1e-12);
}

TEST(PairwiseDistances, Examples) {
  Matrix a(1, 2), b(1, 2);
  a << 0, 0;
  b << 3, 4;
  EXPECT_DOUBLE_EQ(pairwise_distances(a, b).values(0, 0), 5.0);
  Matrix h1(1, 3), h2(1, 3);
  h1 << 1, 0, 1;
  h2 << 1, 1, 1;
  EXPECT_DOUBLE_EQ(pairwise_distances(h1, h2, Metric::hamming).values(0, 0), 1.0);
  Rng rng(1);
  Matrix x = Matrix::Random(5, 4);
  const auto self = pairwise_distances(x, x);
  EXPECT_EQ(self.values.diagonal().norm(), 0.0);
  EXPECT_LT((self.values - self.values.transpose()).norm(), 1e-15);
  EXPECT_THROW(pairwise_distances(Matrix(2, 3), Matrix(2, 4)), ShapeError);
}

TEST(PairwiseDistances, SerialAndParallelAgree) {
  Matrix a = Matrix::Random(37, 8);
  Matrix b = Matrix::Random(23, 8);
  for (Metric metric : {Metric::euclidean, Metric::hamming}) {
    EXPECT_EQ(pairwise_distances(a, b, metric, Exec::serial).values,
              pairwise_distances(a, b, metric, Exec::parallel).values);
  }
}

TEST(GreedyMatch, ZeroDiagonal) {
  const auto c = greedy_match(dm({{0, 7}, {7, 0}}), 2);
  EXPECT_EQ(c.pairs[0], (MatchedPair{0, 0, 0.0}));
  EXPECT_EQ(c.pairs[1], (MatchedPair{1, 1, 0.0}));
  EXPECT_EQ(c.total_distance, 0.0);
}

TEST(GreedyMatch, ReachesOptimumWhenGreedyIsRight) {
  const auto d = dm({{1, 2}, {3, 0}});
  const auto c = greedy_match(d, 2);
  EXPECT_EQ(c.pairs[0], (MatchedPair{1, 1, 0.0}));
  EXPECT_EQ(c.pairs[1], (MatchedPair{0, 0, 1.0}));
  EXPECT_EQ(c.total_distance, 1.0);
  EXPECT_EQ(enumerate_min(d, 2), 1.0);  // min(1 + 0, 2 + 3)
}

TEST(GreedyMatch, DocumentedSuboptimality) {
  const auto d = dm({{0, 1}, {2, 10}});
  EXPECT_EQ(greedy_match(d, 2).total_distance, 10.0);
  EXPECT_EQ(enumerate_min(d, 2), 3.0);
  const auto exact = brute_force_match(d, 2);
  EXPECT_EQ(exact.total_distance, 3.0);
  EXPECT_EQ(exact.pairs[0], (MatchedPair{0, 1, 1.0}));
  EXPECT_EQ(exact.pairs[1], (MatchedPair{1, 0, 2.0}));
}

TEST(GreedyMatch, TiesGoToSmallestPair) {
  const auto c = greedy_match(dm({{1, 0, 0}, {0, 0, 1}}), 1);
  EXPECT_EQ(c.pairs[0].i, 0u);
  EXPECT_EQ(c.pairs[0].j, 1u);
}

TEST(GreedyMatch, PerformsExactlyKRounds) {
  Rng rng(2);
  for (std::size_t k = 1; k <= 5; ++k) {
    const auto c = greedy_match(random_dm(rng, 5, 7), k);
    EXPECT_EQ(c.rounds, k);
    expect_margins(c, k);
  }
}

TEST(GreedyMatch, BudgetOutOfRange) {
  const auto d = dm({{0, 1}, {2, 3}});
  EXPECT_THROW(greedy_match(d, 0), BudgetError);
  EXPECT_THROW(greedy_match(d, 3), BudgetError);
  EXPECT_THROW(brute_force_match(d, 3), BudgetError);
}

TEST(BruteForceMatch, SingleEntryForKOne) {
  Rng rng(3);
  const auto d = random_dm(rng, 4, 5);
  const auto c = brute_force_match(d, 1);
  EXPECT_EQ(c.pairs[0].distance, d.values.minCoeff());
}

TEST(BruteForceMatch, RowPermutationInvariant) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = random_dm(rng, 5, 4);
    std::vector<std::size_t> perm(5);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm);
    DistanceMatrix p = d;
    for (std::size_t i = 0; i < 5; ++i) {
      p.values.row(static_cast<Eigen::Index>(perm[i])) = d.values.row(static_cast<Eigen::Index>(i));
    }
    EXPECT_NEAR(brute_force_match(d, 3).total_distance, brute_force_match(p, 3).total_distance,
                1e-12);
  }
}

TEST(BruteForceMatch, AgreesWithEnumeration) {
  Rng rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng.below(5);
    const std::size_t m = 1 + rng.below(5);
    const std::size_t k = 1 + rng.below(std::min(n, m));
    const auto d = random_dm(rng, n, m);
    const auto c = brute_force_match(d, k);
    expect_margins(c, k);
    EXPECT_NEAR(c.total_distance, enumerate_min(d, k), 1e-12);
  }
}

TEST(BruteForceMatch, RejectsHugeInstances) {
  Rng rng(6);
  EXPECT_THROW(brute_force_match(random_dm(rng, 12, 12), 10), OracleTooLarge);
}

TEST(GreedyMatch, NeverBeatsOracle) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(6);
    const std::size_t m = 1 + rng.below(6);
    const std::size_t k = 1 + rng.below(std::min(n, m));
    const auto d = random_dm(rng, n, m);
    const auto g = greedy_match(d, k);
    expect_margins(g, k);
    EXPECT_GE(g.total_distance, brute_force_match(d, k).total_distance - 1e-12);
  }
}

TEST(GreedyMatch, RecoversPlantedZeroPermutation) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.below(5);
    const std::size_t m = n + rng.below(3);
    auto d = random_dm(rng, n, m);
    d.values.array() += 0.1;
    const auto cols = rng.sample(m, n);
    std::vector<std::size_t> assign(cols.begin(), cols.end());
    rng.shuffle(assign);
    for (std::size_t i = 0; i < n; ++i) d.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(assign[i])) = 0.0;
    const auto c = greedy_match(d, n);
    EXPECT_EQ(c.total_distance, 0.0);
    for (const auto& p : c.pairs) EXPECT_EQ(p.j, assign[p.i]);
  }
}

}  // namespace
}  // namespace matchx
