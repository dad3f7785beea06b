#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "constants.hpp"
#include "detail/gamma.hpp"
#include "errors.hpp"
#include "graph_fit.hpp"
#include "matrix.hpp"
#include "scatter.hpp"

namespace robggm {

// Partial correlation matrix of a positive definite scatter matrix:
// P_ij = -K_ij / sqrt(K_ii K_jj) with K the inverse, diagonal set to 1.
// A zero P_ij is exactly the conditional independence encoded by a
// missing edge.
inline SymMatrix partial_correlations(const SymMatrix& s) {
  const SymMatrix k = invert_pd(s);
  const Eigen::Index p = k.dim();
  Matrix out(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    out(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = -k(i, j) / std::sqrt(k(i, i) * k(j, j));
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return SymMatrix(out);
}

// Pseudo-deviance between the graph-constrained and unconstrained scatter
// estimates, n * (logdet S_constrained - logdet S_unconstrained). The
// constrained fit maximizes the constrained Gaussian likelihood, so this
// is nonnegative up to iteration error; small negative values (within
// 1e-8 * n) are clamped to zero, anything below that is reported as a
// failure.
inline double deviance(const SymMatrix& s_unconstrained,
                       const SymMatrix& s_constrained, long n) {
  if (s_unconstrained.dim() != s_constrained.dim())
    throw DimensionMismatch("deviance: matrix dimensions differ");
  if (n < 1) throw InvalidQuery("deviance: need a positive sample size");
  const double d = static_cast<double>(n) *
                   (log_det_pd(s_constrained) - log_det_pd(s_unconstrained));
  if (d < -1e-8 * static_cast<double>(n))
    throw NegativeDeviance("deviance is " + std::to_string(d) +
                           "; the constrained fit beat the unconstrained one, "
                           "which indicates a failed fit");
  return d < 0.0 ? 0.0 : d;
}

// Upper tail of the chi-square distribution with q degrees of freedom,
// Q(q/2, x/2).
inline double chi_sq_sf(double x, int q) {
  if (q < 1) throw InvalidQuery("chi_sq_sf: degrees of freedom must be >= 1");
  if (std::isnan(x) || x < 0.0)
    throw InvalidQuery("chi_sq_sf: argument must be nonnegative");
  return detail::regularized_gamma_upper(0.5 * q, 0.5 * x);
}

struct TestResult {
  SymMatrix unconstrained_scatter;
  SymMatrix constrained_scatter;
  Vector location;
  double deviance = 0.0;
  int df_chisq = 0;     // q, the number of missing edges
  double sigma1 = 1.0;  // scaling applied to the chi-square reference
  double p_value = 1.0;
  FitMode mode = FitMode::plug_in;
  double df_est = kInfiniteDf;
  bool converged = false;
};

struct TestOptions {
  double tol = 1e-8;       // unconstrained M-estimation
  int max_iter = 500;
  double graph_tol = 1e-10;  // constrained Gaussian fit
  int graph_max_iter = 5000;
  double outer_tol = 1e-8;  // direct mode reweighting loop
  int max_outer = 200;
};

// Goodness-of-fit test of a graph: fit with and without the zero
// constraints, form the deviance, and refer it to sigma1 times a
// chi-square with one degree of freedom per missing edge. When sigma1 is
// not supplied it is computed for the estimator's df under Gaussian data.
inline TestResult deviance_test(const DataMatrix& x, const Graph& g,
                                double df_est = 3.0,
                                FitMode mode = FitMode::plug_in,
                                std::optional<double> sigma1 = std::nullopt,
                                const TestOptions& opts = {}) {
  if (x.p() != g.vertex_count())
    throw DimensionMismatch("deviance_test: data has " + std::to_string(x.p()) +
                            " columns, graph has " +
                            std::to_string(g.vertex_count()) + " vertices");
  TestResult res;
  res.mode = mode;
  res.df_est = df_est;
  res.df_chisq = g.missing_edge_count();
  res.sigma1 = sigma1 ? *sigma1
                      : find_sigma1(static_cast<int>(x.p()), df_est);
  if (!(res.sigma1 > 0.0))
    throw InvalidQuery("deviance_test: sigma1 must be positive");

  ScatterFit unconstrained =
      fit_t_m_estimator(x, df_est, opts.tol, opts.max_iter);
  res.unconstrained_scatter = unconstrained.scatter;

  ConstrainedFit constrained =
      mode == FitMode::direct
          ? direct_fit(x, g, df_est, opts.graph_tol, opts.outer_tol,
                       opts.max_outer)
          : fit_gaussian_graph(unconstrained.scatter, g, opts.graph_tol,
                               opts.graph_max_iter);
  res.constrained_scatter = constrained.scatter;
  res.location = mode == FitMode::direct ? constrained.location
                                         : unconstrained.location;
  res.converged = unconstrained.converged && constrained.converged;

  // With no missing edges there is nothing to test: the statistic is zero
  // by definition, so do not let iteration noise into the comparison.
  if (res.df_chisq == 0) {
    res.deviance = 0.0;
    res.p_value = 1.0;
    return res;
  }
  res.deviance = deviance(res.unconstrained_scatter, res.constrained_scatter,
                          static_cast<long>(x.n()));
  res.p_value = chi_sq_sf(res.deviance / res.sigma1, res.df_chisq);
  return res;
}

}  // namespace robggm
