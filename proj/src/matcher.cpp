#include "matchx/matcher.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "matchx/errors.hpp"

namespace matchx {
namespace {

double row_distance(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j,
                    Metric metric) {
  if (metric == Metric::euclidean) return (a.row(i) - b.row(j)).norm();
  double count = 0.0;
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    if (a(i, k) != b(j, k)) count += 1.0;
  }
  return count;
}

double choose(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    r = r * static_cast<double>(n - i) / static_cast<double>(i + 1);
  }
  return r;
}

void check_budget(const DistanceMatrix& d, std::size_t k) {
  const std::size_t limit = std::min(d.rows(), d.cols());
  if (k < 1 || k > limit) {
    throw BudgetError("budget K=" + std::to_string(k) + " outside [1, " +
                      std::to_string(limit) + "]");
  }
}

struct Enumerator {
  const DistanceMatrix& d;
  std::size_t k;
  std::vector<char> col_used;
  std::vector<MatchedPair> current;
  std::vector<MatchedPair> best;
  double best_total = std::numeric_limits<double>::infinity();

  // Visits partial injections in lexicographic order of their (row-sorted)
  // pair lists: assigning row i to column j precedes skipping row i.
  void visit(std::size_t row, double total) {
    if (current.size() == k) {
      if (total < best_total) {
        best_total = total;
        best = current;
      }
      return;
    }
    if (d.rows() - row < k - current.size()) return;
    for (std::size_t j = 0; j < d.cols(); ++j) {
      if (col_used[j]) continue;
      col_used[j] = 1;
      current.push_back({row, j, d(row, j)});
      visit(row + 1, total + d(row, j));
      current.pop_back();
      col_used[j] = 0;
    }
    visit(row + 1, total);
  }
};

}  // namespace

std::string_view to_string(Metric m) { return m == Metric::euclidean ? "euclidean" : "hamming"; }

Metric parse_metric(std::string_view s) {
  if (s == "euclidean") return Metric::euclidean;
  if (s == "hamming") return Metric::hamming;
  throw ShapeError("unknown metric '" + std::string(s) + "'");
}

NodeSet Correspondence::left_nodes() const {
  std::vector<std::size_t> v;
  v.reserve(pairs.size());
  for (const auto& p : pairs) v.push_back(p.i);
  return NodeSet(std::move(v));
}

NodeSet Correspondence::right_nodes() const {
  std::vector<std::size_t> v;
  v.reserve(pairs.size());
  for (const auto& p : pairs) v.push_back(p.j);
  return NodeSet(std::move(v));
}

DistanceMatrix pairwise_distances(const Matrix& a, const Matrix& b, Metric metric, Exec exec) {
  if (a.cols() != b.cols()) {
    throw ShapeError("feature widths differ: " + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.cols()));
  }
  DistanceMatrix d{Matrix(a.rows(), b.rows()), metric};
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.rows();
#pragma omp parallel for schedule(static) if (exec == Exec::parallel && n > 1)
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) d.values(i, j) = row_distance(a, i, b, j, metric);
  }
  return d;
}

Correspondence greedy_match(const DistanceMatrix& d, std::size_t k) {
  check_budget(d, k);
  const std::size_t n = d.rows();
  const std::size_t m = d.cols();
  std::vector<char> row_free(n, 1);
  std::vector<char> col_free(m, 1);
  Correspondence c;
  c.pairs.reserve(k);
  for (std::size_t round = 0; round < k; ++round) {
    std::size_t bi = n;
    std::size_t bj = m;
    double best = std::numeric_limits<double>::infinity();
    // Row-major scan with strict '<' keeps the smallest (i, j) among ties.
    for (std::size_t i = 0; i < n; ++i) {
      if (!row_free[i]) continue;
      for (std::size_t j = 0; j < m; ++j) {
        if (col_free[j] && (bi == n || d(i, j) < best)) {
          best = d(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    row_free[bi] = 0;
    col_free[bj] = 0;
    c.pairs.push_back({bi, bj, best});
    c.total_distance += best;
    ++c.rounds;
  }
  return c;
}

Correspondence brute_force_match(const DistanceMatrix& d, std::size_t k) {
  check_budget(d, k);
  double count = choose(d.rows(), k) * choose(d.cols(), k);
  for (std::size_t i = 2; i <= k; ++i) count *= static_cast<double>(i);
  if (count > kOracleLimit) {
    throw OracleTooLarge("exact matching would enumerate " + std::to_string(count) +
                         " injections");
  }
  Enumerator e{d, k, std::vector<char>(d.cols(), 0), {}, {}};
  e.current.reserve(k);
  e.visit(0, 0.0);
  Correspondence c;
  c.pairs = std::move(e.best);
  // Recomputed in pair order so the total matches a direct re-summation.
  for (const auto& p : c.pairs) c.total_distance += p.distance;
  return c;
}

}  // namespace matchx
