#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "matchx/explainer.hpp"
#include "matchx/gnn.hpp"
#include "matchx/graph.hpp"

namespace matchx {

/// Explainer under evaluation: returns an explanation with exactly k nodes.
/// May throw; a throwing call counts as not recovered.
using ExplainFn = std::function<Explanation(const Graph&, std::size_t k)>;

/// {0.1, 0.2, ..., 1.0}
std::vector<double> default_rho_grid();

/// True when the prediction on the explanation alone matches the prediction
/// on the full graph.
bool recovers_prediction(const Model& m, const Graph& g, const NodeSet& nodes);

double acc_at_rho(const Model& m, const ExplainFn& explain_fn, std::span<const Graph> data,
                  double rho, Exec exec = Exec::parallel);

/// Arithmetic mean of the curve. Ignores grid spacing and order.
double acc_auc(std::span<const double> curve);

double recall_at_n(const NodeSet& pred, const NodeSet& truth);

struct ReportRow {
  std::string graph_id;
  double rho = 0.0;
  bool recovered = false;
  double delta = 0.0;
  bool failed = false;  // the explainer threw
};

struct ExplanationReport {
  std::vector<double> rho_grid;
  std::vector<double> acc_curve;
  double acc_auc = 0.0;
  // Mean over graphs with ground truth, explained at K = |gt_nodes|.
  std::optional<double> recall_at_n;
  // Mean K / |V| over the same graphs: a uniform random explainer's expectation.
  std::optional<double> random_expected_recall;
  std::vector<ReportRow> rows;  // graph-major, grid-minor
};

ExplanationReport build_report(const Model& m, const ExplainFn& explain_fn,
                               std::span<const Graph> data, std::span<const double> grid,
                               Exec exec = Exec::parallel);

void write_report_csv(std::ostream& os, const ExplanationReport& r);
nlohmann::json report_summary_json(const ExplanationReport& r);

}  // namespace matchx
