#include "matchx/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

#include "matchx/errors.hpp"

namespace matchx {
namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_ratio(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::vector<double> default_rho_grid() {
  std::vector<double> grid;
  for (int k = 1; k <= 10; ++k) grid.push_back(k / 10.0);
  return grid;
}

bool recovers_prediction(const Model& m, const Graph& g, const NodeSet& nodes) {
  return predict_class(m, induced_subgraph(g, nodes)) == predict_class(m, g);
}

double acc_at_rho(const Model& m, const ExplainFn& explain_fn, std::span<const Graph> data,
                  double rho, Exec exec) {
  if (data.empty()) throw EmptyCurve("acc_at_rho needs at least one graph");
  std::vector<int> hit(data.size(), 0);
  parallel_for(data.size(), exec, [&](std::size_t i) {
    try {
      const Explanation e = explain_fn(data[i], budget_for_ratio(rho, data[i].num_nodes()));
      hit[i] = recovers_prediction(m, data[i], e.nodes);
    } catch (const Error&) {
      hit[i] = 0;
    }
  });
  return static_cast<double>(std::accumulate(hit.begin(), hit.end(), 0)) /
         static_cast<double>(data.size());
}

double acc_auc(std::span<const double> curve) {
  if (curve.empty()) throw EmptyCurve("acc_auc of an empty curve");
  return std::accumulate(curve.begin(), curve.end(), 0.0) / static_cast<double>(curve.size());
}

double recall_at_n(const NodeSet& pred, const NodeSet& truth) {
  if (truth.empty()) throw UndefinedRecall("recall against an empty ground truth");
  return static_cast<double>(intersection_size(pred, truth)) / static_cast<double>(truth.size());
}

ExplanationReport build_report(const Model& m, const ExplainFn& explain_fn,
                               std::span<const Graph> data, std::span<const double> grid,
                               Exec exec) {
  if (grid.empty()) throw EmptyCurve("empty ratio grid");
  ExplanationReport r;
  r.rho_grid.assign(grid.begin(), grid.end());
  r.rows.resize(data.size() * grid.size());
  std::vector<double> recall(data.size(), 0.0);
  std::vector<double> expected(data.size(), 0.0);
  std::vector<char> has_truth(data.size(), 0);

  parallel_for(data.size(), exec, [&](std::size_t i) {
    const Graph& g = data[i];
    for (std::size_t k = 0; k < grid.size(); ++k) {
      ReportRow& row = r.rows[i * grid.size() + k];
      row.graph_id = g.id();
      row.rho = grid[k];
      try {
        const Explanation e = explain_fn(g, budget_for_ratio(grid[k], g.num_nodes()));
        row.recovered = recovers_prediction(m, g, e.nodes);
        row.delta = delta_score(m, g, e.nodes);
      } catch (const Error&) {
        row.failed = true;
      }
    }
    if (g.gt_nodes() && !g.gt_nodes()->empty()) {
      has_truth[i] = 1;
      const std::size_t budget = std::min(g.gt_nodes()->size(), g.num_nodes());
      expected[i] = static_cast<double>(budget) / static_cast<double>(g.num_nodes());
      try {
        recall[i] = recall_at_n(explain_fn(g, budget).nodes, *g.gt_nodes());
      } catch (const Error&) {
        recall[i] = 0.0;
      }
    }
  });

  for (std::size_t k = 0; k < grid.size(); ++k) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < data.size(); ++i) hits += r.rows[i * grid.size() + k].recovered;
    r.acc_curve.push_back(data.empty() ? 0.0
                                       : static_cast<double>(hits) /
                                             static_cast<double>(data.size()));
  }
  r.acc_auc = acc_auc(r.acc_curve);
  double recall_sum = 0.0;
  double expected_sum = 0.0;
  std::size_t with_truth = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!has_truth[i]) continue;
    ++with_truth;
    recall_sum += recall[i];
    expected_sum += expected[i];
  }
  if (with_truth > 0) {
    r.recall_at_n = recall_sum / static_cast<double>(with_truth);
    r.random_expected_recall = expected_sum / static_cast<double>(with_truth);
  }
  return r;
}

void write_report_csv(std::ostream& os, const ExplanationReport& r) {
  os << "graph_id,rho,recovered,delta,failed\n";
  for (const ReportRow& row : r.rows) {
    os << row.graph_id << ',' << format_ratio(row.rho) << ',' << (row.recovered ? 1 : 0) << ','
       << format_double(row.delta) << ',' << (row.failed ? 1 : 0) << '\n';
  }
}

nlohmann::json report_summary_json(const ExplanationReport& r) {
  std::size_t failures = 0;
  for (const ReportRow& row : r.rows) failures += row.failed;
  nlohmann::json j;
  j["rho_grid"] = r.rho_grid;
  j["acc_curve"] = r.acc_curve;
  j["acc_auc"] = r.acc_auc;
  j["recall_at_n"] = r.recall_at_n ? nlohmann::json(*r.recall_at_n) : nlohmann::json(nullptr);
  j["random_expected_recall"] = r.random_expected_recall
                                    ? nlohmann::json(*r.random_expected_recall)
                                    : nlohmann::json(nullptr);
  j["rows"] = r.rows.size();
  j["failures"] = failures;
  return j;
}

}  // namespace matchx
