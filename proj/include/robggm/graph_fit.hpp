#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"
#include "matrix.hpp"
#include "scatter.hpp"

namespace robggm {

enum class FitMode { plug_in, direct };

inline const char* fit_mode_name(FitMode m) {
  return m == FitMode::plug_in ? "plug_in" : "direct";
}

struct ConstrainedFit {
  SymMatrix scatter;
  Vector location;  // empty when the fit had no location step
  Graph graph;
  FitMode mode = FitMode::plug_in;
  int inner_iterations = 0;  // clique sweeps, summed over outer rounds
  int outer_iterations = 0;  // reweighting rounds (plug-in: M-estimation steps)
  bool converged = false;
};

namespace detail {

inline void bron_kerbosch(std::vector<int>& r, std::vector<int> p,
                          std::vector<int> x,
                          const std::vector<std::vector<bool>>& adj,
                          std::vector<std::vector<int>>& out) {
  if (p.empty() && x.empty()) {
    out.push_back(r);
    return;
  }
  // Pivot on the candidate with most neighbours in P to prune branches.
  int pivot = -1, best = -1;
  for (int u : p) {
    int deg = 0;
    for (int v : p)
      if (adj[u][v]) ++deg;
    if (deg > best) {
      best = deg;
      pivot = u;
    }
  }
  for (int u : x) {
    int deg = 0;
    for (int v : p)
      if (adj[u][v]) ++deg;
    if (deg > best) {
      best = deg;
      pivot = u;
    }
  }
  std::vector<int> candidates;
  for (int v : p)
    if (pivot < 0 || !adj[pivot][v]) candidates.push_back(v);
  for (int v : candidates) {
    std::vector<int> p_next, x_next;
    for (int w : p)
      if (adj[v][w]) p_next.push_back(w);
    for (int w : x)
      if (adj[v][w]) x_next.push_back(w);
    r.push_back(v);
    bron_kerbosch(r, std::move(p_next), std::move(x_next), adj, out);
    r.pop_back();
    p.erase(std::find(p.begin(), p.end(), v));
    x.push_back(v);
  }
}

// All maximal cliques, each sorted ascending, the list sorted
// lexicographically. Isolated vertices appear as singleton cliques, which
// the scaling iteration relies on to match diagonal entries.
inline std::vector<std::vector<int>> maximal_cliques(const Graph& g) {
  const int p = g.vertex_count();
  std::vector<std::vector<bool>> adj(p, std::vector<bool>(p, false));
  for (auto [i, j] : g.edges()) {
    adj[i][j] = true;
    adj[j][i] = true;
  }
  std::vector<int> all(p);
  for (int i = 0; i < p; ++i) all[i] = i;
  std::vector<std::vector<int>> out;
  std::vector<int> r;
  bron_kerbosch(r, all, {}, adj, out);
  for (auto& c : out) std::sort(c.begin(), c.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// Gaussian covariance fit under the zero constraints of a graph: find the
// matrix whose inverse vanishes at every missing edge while diagonal and
// edge entries match s_in. Iterative proportional scaling over the maximal
// cliques, working on the inverse K:
//   K_CC += inv(S_CC) - inv((K^{-1})_CC)   for each clique C.
// K starts diagonal and updates only touch clique blocks, so entries at
// missing edges stay exactly zero by construction. Convergence is declared
// when the moment constraints hold within tol * max|S|.
inline ConstrainedFit fit_gaussian_graph(const SymMatrix& s_in, const Graph& g,
                                         double tol = 1e-10,
                                         int max_iter = 5000) {
  const Eigen::Index p = s_in.dim();
  if (p != g.vertex_count())
    throw DimensionMismatch("fit_gaussian_graph: matrix dimension " +
                            std::to_string(p) + " vs graph order " +
                            std::to_string(g.vertex_count()));
  cholesky(s_in);  // reject inputs that are not positive definite

  if (g.missing_edge_count() == 0)
    return ConstrainedFit{s_in, Vector(), g, FitMode::plug_in, 0, 0, true};

  const Matrix& s = s_in.mat();
  const double s_scale = s.cwiseAbs().maxCoeff();
  const auto cliques = detail::maximal_cliques(g);
  const auto& edges = g.edges();

  Matrix k = Matrix::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) k(i, i) = 1.0 / s(i, i);

  ConstrainedFit fit{SymMatrix::identity(p), Vector(),           g,
                     FitMode::plug_in,       0,                  0,
                     false};
  Matrix sigma;
  for (int sweep = 0;; ++sweep) {
    sigma = cholesky(SymMatrix(k)).inverse().mat();
    double viol = 0.0;
    for (Eigen::Index i = 0; i < p; ++i)
      viol = std::max(viol, std::abs(sigma(i, i) - s(i, i)));
    for (auto [i, j] : edges)
      viol = std::max(viol, std::abs(sigma(i, j) - s(i, j)));
    fit.inner_iterations = sweep;
    if (viol <= tol * s_scale) {
      fit.converged = true;
      break;
    }
    if (sweep >= max_iter) break;

    for (const auto& c : cliques) {
      const Eigen::Index m = static_cast<Eigen::Index>(c.size());
      CholeskyFactor chol_k = cholesky(SymMatrix(k));
      Matrix rhs = Matrix::Zero(p, m);
      for (Eigen::Index a = 0; a < m; ++a) rhs(c[a], a) = 1.0;
      Matrix cols = chol_k.solve(rhs);
      Matrix sigma_cc(m, m), s_cc(m, m);
      for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b) {
          sigma_cc(a, b) = cols(c[a], b);
          s_cc(a, b) = s(c[a], c[b]);
        }
      Matrix delta = invert_pd(SymMatrix(s_cc)).mat() -
                     invert_pd(SymMatrix(sigma_cc)).mat();
      for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b) k(c[a], c[b]) += delta(a, b);
    }
  }
  fit.scatter = SymMatrix(sigma);
  return fit;
}

// Two-stage estimator: t-type M-estimation of the unconstrained scatter,
// then the Gaussian graph fit applied to it. Reports the M-estimator's
// location unchanged.
inline ConstrainedFit plug_in_fit(const DataMatrix& x, const Graph& g,
                                  double df, double tol = 1e-8,
                                  int max_iter = 500) {
  if (x.p() != g.vertex_count())
    throw DimensionMismatch("plug_in_fit: data has " + std::to_string(x.p()) +
                            " columns, graph has " +
                            std::to_string(g.vertex_count()) + " vertices");
  ScatterFit sf = fit_t_m_estimator(x, df, tol, max_iter);
  ConstrainedFit cf = fit_gaussian_graph(sf.scatter, g);
  cf.location = sf.location;
  cf.mode = FitMode::plug_in;
  cf.outer_iterations = sf.iterations;
  cf.converged = sf.converged && cf.converged;
  return cf;
}

// One-stage estimator: alternate t-type reweighting with a Gaussian graph
// fit of the weighted second-moment matrix, so the zero constraints are
// enforced inside the reweighting loop instead of after it. Starts from
// the plug-in solution.
inline ConstrainedFit direct_fit(const DataMatrix& x, const Graph& g,
                                 double df, double inner_tol = 1e-10,
                                 double outer_tol = 1e-8, int max_outer = 200) {
  if (!(df > 0.0) && !std::isinf(df))
    throw InvalidQuery("direct_fit: df must be positive or infinite");
  const Eigen::Index n = x.n();
  const Eigen::Index p = x.p();
  ConstrainedFit fit = plug_in_fit(x, g, df);
  fit.mode = FitMode::direct;
  fit.converged = false;
  fit.outer_iterations = 0;

  const Matrix& v = x.values();
  Vector mu = fit.location;
  Matrix s = fit.scatter.mat();
  const PsiWeights psi{df, static_cast<int>(p)};
  const double tiny = std::numeric_limits<double>::min();

  for (int outer = 1; outer <= max_outer; ++outer) {
    CholeskyFactor chol = cholesky(SymMatrix(s));
    Vector w(n);
    Vector mu_new = Vector::Zero(p);
    double wsum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = mahalanobis_sq(v.row(i).transpose(), mu, chol);
      w(i) = psi(r);
      wsum += w(i);
      mu_new += w(i) * v.row(i).transpose();
    }
    mu_new /= wsum;

    Matrix m = Matrix::Zero(p, p);
    for (Eigen::Index i = 0; i < n; ++i) {
      Vector d = v.row(i).transpose() - mu_new;
      m += w(i) * (d * d.transpose());
    }
    m /= static_cast<double>(n);

    ConstrainedFit inner = fit_gaussian_graph(SymMatrix(m), g, inner_tol);
    fit.inner_iterations += inner.inner_iterations;
    Matrix s_new = inner.scatter.mat();

    const double scale = std::max(std::sqrt(s_new.trace() / p), tiny);
    const double dmu = (mu_new - mu).norm() /
                       std::max({mu_new.norm(), scale, tiny});
    const double ds = (s_new - s).cwiseAbs().maxCoeff() /
                      std::max(s_new.cwiseAbs().maxCoeff(), tiny);
    mu = mu_new;
    s = s_new;
    fit.outer_iterations = outer;
    if (std::max(dmu, ds) < outer_tol && inner.converged) {
      fit.converged = true;
      break;
    }
  }
  fit.location = mu;
  fit.scatter = SymMatrix(s);
  return fit;
}

}  // namespace robggm
