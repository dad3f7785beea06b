#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"
#include "inference.hpp"
#include "matrix.hpp"

namespace robggm {

// Graph whose edges are the entries of a partial correlation matrix
// strictly exceeding tau in absolute value.
inline Graph threshold_graph(const SymMatrix& partials, double tau,
                             std::vector<std::string> labels = {}) {
  if (std::isnan(tau) || tau < 0.0)
    throw InvalidQuery("threshold_graph: tau must be nonnegative");
  const Eigen::Index p = partials.dim();
  std::vector<Edge> edges;
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = i + 1; j < p; ++j)
      if (std::abs(partials(i, j)) > tau)
        edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
  return Graph(static_cast<int>(p), std::move(edges), std::move(labels));
}

struct SearchStep {
  Graph graph;
  double deviance;
  double p_value;
  std::optional<Edge> removed_edge;  // empty for the starting graph
};

struct SearchTrace {
  std::vector<SearchStep> steps;
  Graph final_graph;
  bool accepted;  // the final graph passes the test at level alpha
};

struct SearchStart {
  static SearchStart full() { return {false, 0.0}; }
  static SearchStart threshold(double tau) { return {true, tau}; }
  bool thresholded;
  double tau;
};

// Backward stepwise model search guarded by the deviance test. From the
// starting graph, repeatedly remove the present edge with the smallest
// absolute fitted partial correlation; keep the removal while the reduced
// graph still passes the test at level alpha, stop at the first rejection.
// All candidate graphs are tested against the same unconstrained fit, and
// sigma1 is computed once. Ties on the partial correlation break towards
// the lexicographically smallest edge, so the search is deterministic.
inline SearchTrace backward_search(const DataMatrix& x, double df_est = 3.0,
                                   double alpha = 0.05,
                                   FitMode mode = FitMode::plug_in,
                                   SearchStart start = SearchStart::full(),
                                   std::optional<double> sigma1 = std::nullopt,
                                   const TestOptions& opts = {}) {
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw InvalidQuery("backward_search: alpha must lie in (0, 1)");
  const int p = static_cast<int>(x.p());
  const double sig1 = sigma1 ? *sigma1 : find_sigma1(p, df_est);
  if (!(sig1 > 0.0))
    throw InvalidQuery("backward_search: sigma1 must be positive");

  ScatterFit unconstrained =
      fit_t_m_estimator(x, df_est, opts.tol, opts.max_iter);
  const SymMatrix partials_hat = partial_correlations(unconstrained.scatter);

  Graph current = start.thresholded
                      ? threshold_graph(partials_hat, start.tau,
                                        x.column_names())
                      : Graph::full(p, x.column_names());

  struct Tested {
    SymMatrix scatter;
    double deviance;
    double p_value;
  };
  auto test_graph = [&](const Graph& g) -> Tested {
    ConstrainedFit constrained =
        mode == FitMode::direct
            ? direct_fit(x, g, df_est, opts.graph_tol, opts.outer_tol,
                         opts.max_outer)
            : fit_gaussian_graph(unconstrained.scatter, g, opts.graph_tol,
                                 opts.graph_max_iter);
    const int q = g.missing_edge_count();
    // A graph with no missing edges constrains nothing; its statistic is
    // zero by definition rather than a noisy difference of logdets.
    if (q == 0) return {std::move(constrained.scatter), 0.0, 1.0};
    const double d = deviance(unconstrained.scatter, constrained.scatter,
                              static_cast<long>(x.n()));
    return {std::move(constrained.scatter), d, chi_sq_sf(d / sig1, q)};
  };

  SearchTrace trace{{}, current, false};
  Tested now = test_graph(current);
  trace.steps.push_back({current, now.deviance, now.p_value, std::nullopt});
  if (now.p_value < alpha) {
    // The starting graph itself is already rejected; nothing to prune.
    trace.final_graph = current;
    trace.accepted = false;
    return trace;
  }

  while (!current.edges().empty()) {
    // Partial correlations under the current fitted model rank the edges.
    const SymMatrix pmat = partial_correlations(now.scatter);
    Edge weakest = current.edges().front();
    double weakest_val = std::abs(pmat(weakest.first, weakest.second));
    for (const auto& e : current.edges()) {
      const double v = std::abs(pmat(e.first, e.second));
      if (v < weakest_val) {
        weakest = e;
        weakest_val = v;
      }
    }

    Graph candidate = current.without_edge(weakest.first, weakest.second);
    Tested next = test_graph(candidate);
    trace.steps.push_back({candidate, next.deviance, next.p_value, weakest});
    if (next.p_value < alpha) break;
    current = candidate;
    now = std::move(next);
  }

  trace.final_graph = current;
  trace.accepted = true;
  return trace;
}

}  // namespace robggm
