#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "matchx/graph.hpp"
#include "matchx/parallel.hpp"

namespace matchx {

enum class Metric { euclidean, hamming };

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view s);

/// Pairwise node distances between two embedding sets.
struct DistanceMatrix {
  Matrix values;
  Metric metric = Metric::euclidean;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
  double operator()(std::size_t i, std::size_t j) const { return values(i, j); }
};

struct MatchedPair {
  std::size_t i = 0;  // node of the left graph
  std::size_t j = 0;  // node of the right graph
  double distance = 0.0;

  friend bool operator==(const MatchedPair&, const MatchedPair&) = default;
};

/// Partial injection between the nodes of two graphs. Rows are distinct and
/// columns are distinct.
struct Correspondence {
  std::vector<MatchedPair> pairs;
  double total_distance = 0.0;
  std::size_t rounds = 0;  // selection rounds performed

  NodeSet left_nodes() const;
  NodeSet right_nodes() const;
};

/// Row-parallel over `a` for Exec::parallel; identical output either way.
DistanceMatrix pairwise_distances(const Matrix& a, const Matrix& b,
                                  Metric metric = Metric::euclidean,
                                  Exec exec = Exec::parallel);

/// K rounds of: take the smallest remaining entry (ties: smallest (i, j)),
/// record the pair, retire its row and column.
Correspondence greedy_match(const DistanceMatrix& d, std::size_t k);

/// Largest enumeration the exact oracle accepts: C(n,K) C(m,K) K!.
inline constexpr double kOracleLimit = 1e7;

/// Exact minimum-cost size-K partial injection by enumeration. Among equal
/// optima, the lexicographically smallest pair list (sorted by row) wins.
Correspondence brute_force_match(const DistanceMatrix& d, std::size_t k);

}  // namespace matchx
