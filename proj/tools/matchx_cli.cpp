#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "matchx/augment.hpp"
#include "matchx/datagen.hpp"
#include "matchx/errors.hpp"
#include "matchx/explainer.hpp"
#include "matchx/gnn.hpp"
#include "matchx/io.hpp"
#include "matchx/metrics.hpp"
#include "matchx/parallel.hpp"
#include "matchx/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;
constexpr int kFormatVersion = 1;

class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

// Every option of the subcommand with its effective value.
json resolved_options(const CLI::App& sub) {
  json j = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "h") continue;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      j[name] = res.size() == 1 ? json(res[0]) : json(res);
    } else {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

void write_run_manifest(const fs::path& out, const CLI::App& sub, const json& resolved = {}) {
  json j;
  j["command"] = sub.get_name();
  j["version"] = kFormatVersion;
  j["timestamp"] = utc_now();
  j["threads"] = matchx::max_threads();
  j["config"] = resolved_options(sub);
  if (!resolved.is_null()) j["resolved"] = resolved;
  matchx::write_text(out.string() + ".run.json", j.dump(2) + "\n");
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::size_t class_count(const std::vector<matchx::Graph>& data) {
  int hi = 1;
  for (const auto& g : data) {
    if (!g.label()) throw matchx::MissingLabel("graph '" + g.id() + "' has no label");
    hi = std::max(hi, *g.label());
  }
  return static_cast<std::size_t>(hi) + 1;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || !(v > 0.0 && v <= 1.0)) {
      throw UsageError("--rho-grid: bad ratio '" + item + "'");
    }
    grid.push_back(v);
  }
  if (grid.empty()) throw UsageError("--rho-grid is empty");
  return grid;
}

// gen ------------------------------------------------------------------

struct GenArgs {
  std::string preset = "ba2";
  std::optional<std::size_t> n;
  std::uint64_t seed = 0;
  std::string out;
  std::optional<std::string> id_prefix;
  std::optional<std::size_t> base_min;
  std::optional<std::size_t> base_max;
  std::optional<std::size_t> attach_edges;
};

void add_gen(CLI::App& app, GenArgs& a) {
  auto* sub = app.add_subcommand("gen", "Generate a synthetic motif dataset");
  sub->add_option("--preset", a.preset, "Dataset preset")
      ->check(CLI::IsMember({"ba2", "ba3"}))
      ->capture_default_str();
  sub->add_option("--n", a.n, "Number of graphs");
  sub->add_option("--seed", a.seed, "Root seed")->capture_default_str();
  sub->add_option("-o,--out", a.out, "Output dataset file")->required();
  sub->add_option("--id-prefix", a.id_prefix, "Graph id prefix");
  sub->add_option("--base-min", a.base_min, "Smallest base graph");
  sub->add_option("--base-max", a.base_max, "Largest base graph");
  sub->add_option("--attach-edges", a.attach_edges, "Bridges between base and motif");
}

int run_gen(const CLI::App& sub, const GenArgs& a) {
  matchx::DatasetSpec spec = matchx::preset(a.preset);
  if (a.n) spec.n_graphs = *a.n;
  if (a.id_prefix) spec.id_prefix = *a.id_prefix;
  if (a.base_min) spec.base_min = *a.base_min;
  if (a.base_max) spec.base_max = *a.base_max;
  if (a.attach_edges) spec.attach_edges = *a.attach_edges;
  spec.seed = a.seed;
  try {
    spec.validate();
  } catch (const matchx::Error& e) {
    throw UsageError(e.what());
  }
  const auto data = matchx::gen_motif_dataset(spec);
  json manifest;
  manifest["spec"] = matchx::spec_to_json(spec);
  manifest["seed"] = spec.seed;
  manifest["version"] = kFormatVersion;
  matchx::save_dataset(a.out, data, manifest);
  write_run_manifest(a.out, sub, manifest);
  std::cout << "wrote " << data.size() << " graphs to " << a.out << "\n";
  return 0;
}

// train ----------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::optional<std::string> test;
  int epochs = 100;
  std::size_t batch_size = 32;
  double lr = 0.01;
  std::uint64_t seed = 0;
  std::string pooling = "mean";
  std::string strategy = "none";
  double rho = 0.95;
  std::optional<int> warmup;
  std::string out;
  std::optional<std::string> log;
};

void add_train(CLI::App& app, TrainArgs& a) {
  auto* sub = app.add_subcommand("train", "Train a model, optionally with augmentation");
  sub->add_option("--data", a.data, "Training dataset")->required();
  sub->add_option("--test", a.test, "Held-out dataset for accuracy logging");
  sub->add_option("--epochs", a.epochs)->check(CLI::NonNegativeNumber)->capture_default_str();
  sub->add_option("--batch-size", a.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--lr", a.lr)->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--seed", a.seed)->capture_default_str();
  sub->add_option("--pooling", a.pooling)
      ->check(CLI::IsMember({"sum", "mean"}))
      ->capture_default_str();
  sub->add_option("--strategy", a.strategy)
      ->check(CLI::IsMember({"none", "dropnode", "fpdrop", "matchdrop"}))
      ->capture_default_str();
  sub->add_option("--rho", a.rho, "Retaining ratio")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sub->add_option("--warmup", a.warmup, "Plain epochs before augmentation")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("-o,--out", a.out, "Checkpoint file")->required();
  sub->add_option("--log", a.log, "Per-epoch CSV log");
}

int run_train(const CLI::App& sub, const TrainArgs& a) {
  if (!(a.rho > 0.0)) throw UsageError("--rho must be > 0");
  const auto train = matchx::load_dataset(a.data);
  if (train.empty()) throw matchx::ParseError(a.data + ": dataset is empty");
  std::vector<matchx::Graph> test;
  if (a.test) test = matchx::load_dataset(*a.test);

  std::size_t classes = class_count(train);
  for (const auto& g : test) {
    if (g.label()) classes = std::max(classes, static_cast<std::size_t>(*g.label()) + 1);
  }
  const matchx::Model init = matchx::Model::initialized(
      {train[0].feature_width(), 32, 32, classes}, matchx::parse_pooling(a.pooling),
      matchx::derive_seed(a.seed, "model"));

  matchx::TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch_size;
  cfg.learning_rate = a.lr;
  cfg.seed = a.seed;
  matchx::AugmentConfig acfg;
  acfg.strategy = matchx::parse_strategy(a.strategy);
  acfg.rho = a.rho;
  acfg.warmup_epochs = a.warmup;
  acfg.seed = a.seed;

  std::ostringstream log;
  log << "epoch,train_loss,train_acc,test_acc,strategy,rho,seed\n";
  auto on_epoch = [&](int epoch, double loss, const matchx::Model& m) {
    if (!a.log) return;
    log << epoch << ',' << fmt("%.17g", loss) << ',' << fmt("%.17g", matchx::accuracy(m, train))
        << ',' << (test.empty() ? std::string() : fmt("%.17g", matchx::accuracy(m, test)))
        << ',' << a.strategy << ',' << fmt("%.6g", a.rho) << ',' << a.seed << '\n';
  };
  const auto result = matchx::train_with_augmentation(init, train, cfg, acfg, on_epoch);

  matchx::save_checkpoint(result.model, a.out);
  if (a.log) matchx::write_text(*a.log, log.str());
  write_run_manifest(a.out, sub,
                     {{"epochs", cfg.epochs},
                      {"batch_size", cfg.batch_size},
                      {"learning_rate", cfg.learning_rate},
                      {"seed", cfg.seed},
                      {"widths", init.widths()},
                      {"pooling", a.pooling},
                      {"strategy", a.strategy},
                      {"rho", a.rho},
                      {"warmup_epochs", acfg.resolved_warmup(cfg.epochs)}});
  std::cout << "train_acc=" << fmt("%.4f", matchx::accuracy(result.model, train));
  if (!test.empty()) std::cout << " test_acc=" << fmt("%.4f", matchx::accuracy(result.model, test));
  std::cout << "\n";
  return 0;
}

// explain ----------------------------------------------------------------

struct ExplainArgs {
  std::string model;
  std::string data;
  std::optional<std::string> refs;
  std::optional<double> ref_sample;
  std::optional<std::size_t> k;
  std::optional<double> rho;
  std::optional<std::string> graph_id;
  std::string metric = "euclidean";
  std::uint64_t seed = 0;
  std::string out;
  std::optional<std::string> dot;
};

void add_explain(CLI::App& app, ExplainArgs& a) {
  auto* sub = app.add_subcommand("explain", "Explain predictions by subgraph matching");
  sub->add_option("--model", a.model, "Checkpoint")->required();
  sub->add_option("--data", a.data, "Graphs to explain")->required();
  sub->add_option("--refs", a.refs, "Reference graphs (default: --data)");
  sub->add_option("--ref-sample", a.ref_sample, "Fraction of references to sweep")
      ->check(CLI::Range(0.0, 1.0));
  auto* k = sub->add_option("--k", a.k, "Explanation size in nodes")->check(CLI::PositiveNumber);
  auto* rho = sub->add_option("--rho", a.rho, "Explanation size as a node ratio (default 0.5)")
                  ->check(CLI::Range(0.0, 1.0));
  k->excludes(rho);
  sub->add_option("--graph-id", a.graph_id, "Explain a single graph");
  sub->add_option("--metric", a.metric)
      ->check(CLI::IsMember({"euclidean", "hamming"}))
      ->capture_default_str();
  sub->add_option("--seed", a.seed)->capture_default_str();
  sub->add_option("-o,--out", a.out, "Explanation JSON")->required();
  sub->add_option("--dot", a.dot, "DOT file (one graph) or directory (several)");
}

int run_explain(const CLI::App& sub, const ExplainArgs& a) {
  const matchx::Model m = matchx::load_checkpoint(a.model);
  auto data = matchx::load_dataset(a.data);
  if (a.graph_id) {
    std::erase_if(data, [&](const matchx::Graph& g) { return g.id() != *a.graph_id; });
    if (data.empty()) throw matchx::ParseError(a.data + ": no graph with id '" + *a.graph_id + "'");
  }
  auto ref_graphs = a.refs ? matchx::load_dataset(*a.refs) : matchx::load_dataset(a.data);
  const auto refs = matchx::ReferenceSet::build(m, std::move(ref_graphs));

  matchx::ExplainConfig cfg;
  if (a.k) {
    cfg.budget = matchx::Budget::nodes(*a.k);
  } else {
    const double rho = a.rho.value_or(0.5);
    if (!(rho > 0.0)) throw UsageError("--rho must be > 0");
    cfg.budget = matchx::Budget::ratio(rho);
  }
  if (a.ref_sample && !(*a.ref_sample > 0.0)) throw UsageError("--ref-sample must be > 0");
  cfg.reference_sample = a.ref_sample;
  cfg.seed = a.seed;
  cfg.metric = matchx::parse_metric(a.metric);
  if (a.k) {
    for (const auto& g : data) {
      if (*a.k > g.num_nodes()) {
        throw UsageError("--k " + std::to_string(*a.k) + " exceeds the " +
                         std::to_string(g.num_nodes()) + " nodes of graph '" + g.id() + "'");
      }
    }
  }

  json rows = json::array();
  std::vector<std::optional<matchx::Explanation>> found;
  std::size_t unmatched = 0;
  for (const auto& g : data) {
    try {
      const auto e = matchx::explain(m, g, refs, cfg);
      rows.push_back(matchx::explanation_to_json(e));
      found.push_back(e);
    } catch (const matchx::NoQualifiedCounterpart&) {
      rows.push_back({{"graph_id", g.id()}, {"error", "no_qualified_counterpart"}});
      found.push_back(std::nullopt);
      ++unmatched;
    }
  }
  json out;
  out["explanations"] = rows;
  matchx::write_text(a.out, out.dump(2) + "\n");

  if (a.dot) {
    if (data.size() == 1) {
      if (found[0]) matchx::write_text(*a.dot, matchx::explanation_to_dot(data[0], *found[0]));
    } else {
      fs::create_directories(*a.dot);
      for (std::size_t i = 0; i < data.size(); ++i) {
        if (!found[i]) continue;
        matchx::write_text(fs::path(*a.dot) / (data[i].id() + ".dot"),
                           matchx::explanation_to_dot(data[i], *found[i]));
      }
    }
  }
  json budget = cfg.budget.is_ratio() ? json{{"rho", cfg.budget.rho()}}
                                      : json{{"k", cfg.budget.k()}};
  write_run_manifest(a.out, sub,
                     {{"budget", budget},
                      {"references", refs.size()},
                      {"metric", a.metric},
                      {"seed", a.seed}});
  std::cout << "explained " << data.size() - unmatched << " of " << data.size() << " graphs";
  if (unmatched) std::cout << " (" << unmatched << " without a qualified counterpart)";
  std::cout << "\n";
  return 0;
}

// eval -----------------------------------------------------------------

struct EvalArgs {
  std::string model;
  std::string data;
  std::optional<std::string> refs;
  std::optional<double> ref_sample;
  std::string explainer = "match";
  std::string rho_grid = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0";
  std::uint64_t seed = 0;
  std::string out;
};

void add_eval(CLI::App& app, EvalArgs& a) {
  auto* sub = app.add_subcommand("eval", "Fidelity and recall report for an explainer");
  sub->add_option("--model", a.model, "Checkpoint")->required();
  sub->add_option("--data", a.data, "Evaluation graphs")->required();
  sub->add_option("--refs", a.refs, "Reference graphs for the match explainer (default: --data)");
  sub->add_option("--ref-sample", a.ref_sample, "Fraction of references to sweep")
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--explainer", a.explainer)
      ->check(CLI::IsMember({"match", "random", "sa"}))
      ->capture_default_str();
  sub->add_option("--rho-grid", a.rho_grid, "Comma-separated ratios")->capture_default_str();
  sub->add_option("--seed", a.seed)->capture_default_str();
  sub->add_option("-o,--out", a.out, "Report CSV; the summary goes next to it as .summary.json")
      ->required();
}

int run_eval(const CLI::App& sub, const EvalArgs& a) {
  const auto grid = parse_grid(a.rho_grid);
  if (a.ref_sample && !(*a.ref_sample > 0.0)) throw UsageError("--ref-sample must be > 0");
  const matchx::Model m = matchx::load_checkpoint(a.model);
  const auto data = matchx::load_dataset(a.data);

  matchx::ReferenceSet refs;
  matchx::ExplainFn fn;
  if (a.explainer == "match") {
    refs = matchx::ReferenceSet::build(
        m, a.refs ? matchx::load_dataset(*a.refs) : matchx::load_dataset(a.data));
    fn = [&](const matchx::Graph& g, std::size_t k) {
      matchx::ExplainConfig cfg;
      cfg.budget = matchx::Budget::nodes(k);
      cfg.reference_sample = a.ref_sample;
      cfg.seed = a.seed;
      cfg.exec = matchx::Exec::serial;  // the report already runs graphs in parallel
      return matchx::explain(m, g, refs, cfg);
    };
  } else if (a.explainer == "random") {
    fn = [&](const matchx::Graph& g, std::size_t k) {
      const auto s = matchx::derive_seed(a.seed, "random", matchx::hash_name(g.id()) ^ k);
      return matchx::explain_random(m, g, k, s);
    };
  } else {
    fn = [&](const matchx::Graph& g, std::size_t k) { return matchx::explain_sa(m, g, k); };
  }
  const auto report = matchx::build_report(m, fn, data, grid);

  std::ostringstream csv;
  matchx::write_report_csv(csv, report);
  matchx::write_text(a.out, csv.str());
  json summary = matchx::report_summary_json(report);
  summary["explainer"] = a.explainer;
  fs::path summary_path(a.out);
  summary_path.replace_extension(".summary.json");
  matchx::write_text(summary_path, summary.dump(2) + "\n");
  write_run_manifest(a.out, sub);

  std::cout << "explainer=" << a.explainer << " acc_auc=" << fmt("%.4f", report.acc_auc);
  if (report.recall_at_n) {
    std::cout << " recall=" << fmt("%.4f", *report.recall_at_n)
              << " random_expected_recall=" << fmt("%.4f", *report.random_expected_recall);
  }
  std::cout << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"matchx: subgraph-matching explanations for graph classifiers"};
  app.set_config("--config", "", "TOML file with [gen]/[train]/[explain]/[eval] sections");
  app.require_subcommand(1);

  GenArgs gen;
  TrainArgs train;
  ExplainArgs expl;
  EvalArgs eval;
  add_gen(app, gen);
  add_train(app, train);
  add_explain(app, expl);
  add_eval(app, eval);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  matchx::configure_threads();
  const CLI::App* sub = app.get_subcommands().front();
  try {
    if (sub->get_name() == "gen") return run_gen(*sub, gen);
    if (sub->get_name() == "train") return run_train(*sub, train);
    if (sub->get_name() == "explain") return run_explain(*sub, expl);
    return run_eval(*sub, eval);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const matchx::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const matchx::ShapeError& e) {
    std::cerr << "error: model and data disagree: " << e.what() << "\n";
    return kExitData;
  } catch (const matchx::BudgetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
