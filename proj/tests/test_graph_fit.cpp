#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <robggm/graph_fit.hpp>
#include <robggm/matrix.hpp>

#include "support/optim.hpp"
#include "support/oracles.hpp"
#include "support/rng.hpp"

using robggm::DataMatrix;
using robggm::Graph;
using robggm::Matrix;
using robggm::SymMatrix;
using robggm::Vector;

TEST_CASE("maximal cliques", "[graphfit]") {
  auto cl = robggm::detail::maximal_cliques(Graph(3, {{0, 1}, {1, 2}}));
  REQUIRE(cl.size() == 2);
  CHECK(cl[0] == std::vector<int>{0, 1});
  CHECK(cl[1] == std::vector<int>{1, 2});

  cl = robggm::detail::maximal_cliques(Graph::full(4));
  REQUIRE(cl.size() == 1);
  CHECK(cl[0] == std::vector<int>{0, 1, 2, 3});

  cl = robggm::detail::maximal_cliques(Graph::with_no_edges(3));
  REQUIRE(cl.size() == 3);  // isolated vertices are singleton cliques
  CHECK(cl[0] == std::vector<int>{0});

  // Two triangles sharing vertex 2.
  cl = robggm::detail::maximal_cliques(
      Graph(5, {{0, 1}, {0, 2}, {1, 2}, {2, 3}, {2, 4}, {3, 4}}));
  REQUIRE(cl.size() == 2);
  CHECK(cl[0] == std::vector<int>{0, 1, 2});
  CHECK(cl[1] == std::vector<int>{2, 3, 4});
}

TEST_CASE("saturated graph returns the input matrix unchanged", "[graphfit]") {
  testsupport::Rng rng(41);
  SymMatrix s(testsupport::random_pd(rng, 5));
  auto fit = robggm::fit_gaussian_graph(s, Graph::full(5));
  CHECK(fit.converged);
  CHECK(fit.inner_iterations == 0);
  CHECK(fit.scatter.mat() == s.mat());  // exact, no iteration happened
}

TEST_CASE("edgeless graph yields the diagonal", "[graphfit]") {
  testsupport::Rng rng(42);
  SymMatrix s(testsupport::random_pd(rng, 4));
  auto fit = robggm::fit_gaussian_graph(s, Graph::with_no_edges(4));
  CHECK(fit.converged);
  for (int i = 0; i < 4; ++i) {
    CHECK(fit.scatter(i, i) == Catch::Approx(s(i, i)).epsilon(1e-12));
    for (int j = 0; j < i; ++j)
      CHECK(std::abs(fit.scatter(i, j)) < 1e-12);
  }
}

TEST_CASE("chain fit matches a dense Newton solution", "[graphfit]") {
  Matrix s(3, 3);
  s << 1.0, 0.5, 0.5, 0.5, 1.0, 0.5, 0.5, 0.5, 1.0;
  Graph chain(3, {{0, 1}, {1, 2}});
  auto fit = robggm::fit_gaussian_graph(SymMatrix(s), chain);
  REQUIRE(fit.converged);

  Matrix oracle = testsupport::gaussian_graph_mle_newton(s, chain);
  CHECK((fit.scatter.mat() - oracle).cwiseAbs().maxCoeff() < 1e-6);

  // Under the chain, the 0-2 entry of the inverse vanishes and the 0-2
  // covariance becomes the product of the adjacent ones: 0.25.
  CHECK(fit.scatter(0, 2) == Catch::Approx(0.25).margin(1e-9));

  SymMatrix k = robggm::invert_pd(fit.scatter);
  CHECK(std::abs(k(0, 2)) < 1e-12 * k.mat().cwiseAbs().maxCoeff());
}

TEST_CASE("random graphs match the Newton oracle", "[graphfit]") {
  testsupport::Rng rng(43);
  for (int rep = 0; rep < 10; ++rep) {
    const int p = 4 + rep % 3;
    SymMatrix s(testsupport::random_pd(rng, p));
    std::vector<robggm::Edge> edges;
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j)
        if (rng.uniform() < 0.5) edges.emplace_back(i, j);
    Graph g(p, edges);

    auto fit = robggm::fit_gaussian_graph(s, g);
    REQUIRE(fit.converged);
    Matrix oracle = testsupport::gaussian_graph_mle_newton(s.mat(), g);
    CHECK((fit.scatter.mat() - oracle).cwiseAbs().maxCoeff() <
          1e-6 * s.mat().cwiseAbs().maxCoeff());
  }
}

TEST_CASE("moment matching and zero constraints hold at the fit",
          "[graphfit]") {
  testsupport::Rng rng(44);
  SymMatrix s(testsupport::random_pd(rng, 6));
  Graph g(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}, {1, 4}});
  const double tol = 1e-10;
  auto fit = robggm::fit_gaussian_graph(s, g, tol);
  REQUIRE(fit.converged);

  const double scale = s.mat().cwiseAbs().maxCoeff();
  for (int i = 0; i < 6; ++i)
    CHECK(std::abs(fit.scatter(i, i) - s(i, i)) <= tol * scale);
  for (auto [i, j] : g.edges())
    CHECK(std::abs(fit.scatter(i, j) - s(i, j)) <= tol * scale);

  SymMatrix k = robggm::invert_pd(fit.scatter);
  const double kscale = k.mat().cwiseAbs().maxCoeff();
  for (auto [i, j] : g.missing_edges())
    CHECK(std::abs(k(i, j)) < 1e-7 * kscale);
}

TEST_CASE("log determinant grows as constraints are added", "[graphfit]") {
  testsupport::Rng rng(45);
  SymMatrix s(testsupport::random_pd(rng, 5));
  Graph g = Graph::full(5);
  double prev = robggm::log_det_pd(s);
  // Remove edges one at a time; each nested fit can only increase logdet.
  for (auto [i, j] : Graph::full(5).edges()) {
    g = g.without_edge(i, j);
    auto fit = robggm::fit_gaussian_graph(s, g);
    REQUIRE(fit.converged);
    const double ld = robggm::log_det_pd(fit.scatter);
    CHECK(ld >= prev - 1e-9);
    prev = ld;
  }
}

TEST_CASE("input validation of the graph fit", "[graphfit]") {
  testsupport::Rng rng(46);
  SymMatrix s(testsupport::random_pd(rng, 4));
  CHECK_THROWS_AS(robggm::fit_gaussian_graph(s, Graph::full(5)),
                  robggm::DimensionMismatch);

  Matrix indef(2, 2);
  indef << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(
      robggm::fit_gaussian_graph(SymMatrix(indef), Graph::full(2)),
      robggm::NotPositiveDefinite);

  // Iteration cap: zero sweeps allowed, constraints unmet.
  Graph g(4, {{0, 1}});
  auto fit = robggm::fit_gaussian_graph(s, g, 1e-10, 0);
  CHECK_FALSE(fit.converged);
}

TEST_CASE("plug-in fit constrains the unconstrained estimate", "[graphfit]") {
  testsupport::Rng rng(47);
  Vector mu(4);
  mu << 1.0, -1.0, 0.0, 2.0;
  Matrix l = Eigen::LLT<Matrix>(testsupport::random_pd(rng, 4)).matrixL();
  DataMatrix x(testsupport::t_sample(rng, 100, mu, l, 3.0));
  Graph chain(4, {{0, 1}, {1, 2}, {2, 3}});

  auto unconstrained = robggm::fit_t_m_estimator(x, 3.0);
  auto fit = robggm::plug_in_fit(x, chain, 3.0);
  REQUIRE(fit.converged);
  CHECK(fit.mode == robggm::FitMode::plug_in);
  CHECK((fit.location - unconstrained.location).cwiseAbs().maxCoeff() == 0.0);

  const double scale = unconstrained.scatter.mat().cwiseAbs().maxCoeff();
  for (int i = 0; i < 4; ++i)
    CHECK(std::abs(fit.scatter(i, i) - unconstrained.scatter(i, i)) <
          1e-8 * scale);
  for (auto [i, j] : chain.edges())
    CHECK(std::abs(fit.scatter(i, j) - unconstrained.scatter(i, j)) <
          1e-8 * scale);

  // Saturated graph: plug-in equals the unconstrained fit.
  auto full_fit = robggm::plug_in_fit(x, Graph::full(4), 3.0);
  CHECK(full_fit.scatter.mat() == unconstrained.scatter.mat());
}

TEST_CASE("direct fit with infinite df reproduces the plug-in fit",
          "[graphfit]") {
  testsupport::Rng rng(48);
  DataMatrix x(rng.normal_matrix(60, 4));
  Graph g(4, {{0, 1}, {1, 2}, {2, 3}});

  auto plug = robggm::plug_in_fit(x, g, robggm::kInfiniteDf);
  auto direct = robggm::direct_fit(x, g, robggm::kInfiniteDf);
  CHECK(direct.converged);
  CHECK(direct.mode == robggm::FitMode::direct);
  CHECK((direct.scatter.mat() - plug.scatter.mat()).cwiseAbs().maxCoeff() <
        1e-12);
  CHECK((direct.location - plug.location).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("direct fit with the saturated graph matches the plain estimator",
          "[graphfit]") {
  testsupport::Rng rng(49);
  Vector mu = Vector::Zero(3);
  Matrix l = Eigen::LLT<Matrix>(testsupport::random_pd(rng, 3)).matrixL();
  DataMatrix x(testsupport::t_sample(rng, 80, mu, l, 3.0));

  auto direct = robggm::direct_fit(x, Graph::full(3), 3.0, 1e-12, 1e-11, 500);
  auto plain = robggm::fit_t_m_estimator(x, 3.0, 1e-11, 2000);
  REQUIRE(direct.converged);
  REQUIRE(plain.converged);
  CHECK((direct.scatter.mat() - plain.scatter.mat()).cwiseAbs().maxCoeff() <
        1e-8);
  CHECK((direct.location - plain.location).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("direct fit solves the constrained estimating equations",
          "[graphfit]") {
  testsupport::Rng rng(50);
  Vector mu(4);
  mu << 0.0, 1.0, -1.0, 0.5;
  Matrix l = Eigen::LLT<Matrix>(testsupport::random_pd(rng, 4)).matrixL();
  Matrix xs = testsupport::t_sample(rng, 120, mu, l, 3.0);
  DataMatrix x(xs);
  Graph g(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});

  const double outer_tol = 1e-10;
  auto fit = robggm::direct_fit(x, g, 3.0, 1e-12, outer_tol, 500);
  REQUIRE(fit.converged);

  // Location equation, weighted second-moment matching on edges and
  // diagonal, and zeros of the inverse at missing edges.
  const robggm::PsiWeights psi{3.0, 4};
  auto chol = robggm::cholesky(fit.scatter);
  Vector loc_eq = Vector::Zero(4);
  Matrix m = Matrix::Zero(4, 4);
  for (Eigen::Index i = 0; i < xs.rows(); ++i) {
    Vector d = xs.row(i).transpose() - fit.location;
    const double w = psi(robggm::mahalanobis_sq(xs.row(i).transpose(),
                                                fit.location, chol));
    loc_eq += w * d;
    m += w * (d * d.transpose());
  }
  m /= static_cast<double>(xs.rows());

  const double scale = fit.scatter.mat().cwiseAbs().maxCoeff();
  CHECK(loc_eq.cwiseAbs().maxCoeff() / xs.rows() <
        10 * outer_tol * std::sqrt(scale));
  for (int i = 0; i < 4; ++i)
    CHECK(std::abs(m(i, i) - fit.scatter(i, i)) < 1e-7 * scale);
  for (auto [i, j] : g.edges())
    CHECK(std::abs(m(i, j) - fit.scatter(i, j)) < 1e-7 * scale);
  SymMatrix k = robggm::invert_pd(fit.scatter);
  for (auto [i, j] : g.missing_edges())
    CHECK(std::abs(k(i, j)) < 1e-8 * k.mat().cwiseAbs().maxCoeff());
}

TEST_CASE("direct fit agrees with raw minimization of the constrained "
          "objective", "[graphfit]") {
  testsupport::Rng rng(51);
  Vector mu = Vector::Zero(3);
  Matrix l = Eigen::LLT<Matrix>(testsupport::random_pd(rng, 3)).matrixL();
  Matrix xs = testsupport::t_sample(rng, 70, mu, l, 3.0);
  DataMatrix x(xs);
  Graph g(3, {{0, 1}, {1, 2}});  // one missing edge: (0, 2)

  auto fit = robggm::direct_fit(x, g, 3.0, 1e-12, 1e-11, 500);
  REQUIRE(fit.converged);

  // BFGS on (mu, free entries of the inverse K); -logdet keeps the
  // iterates inside the cone, invalid points return +inf.
  const double df = 3.0;
  std::vector<std::pair<int, int>> params = {{0, 0}, {1, 1}, {2, 2}};
  for (auto [i, j] : g.edges()) params.emplace_back(i, j);
  auto objective = [&](const Vector& theta) {
    Vector m2 = theta.head(3);
    Matrix kmat = Matrix::Zero(3, 3);
    for (size_t a = 0; a < params.size(); ++a) {
      auto [i, j] = params[a];
      kmat(i, j) = theta(3 + a);
      kmat(j, i) = theta(3 + a);
    }
    Eigen::LLT<Matrix> llt(kmat);
    if (llt.info() != Eigen::Success)
      return std::numeric_limits<double>::infinity();
    double log_det_k = 0.0;
    for (int i = 0; i < 3; ++i)
      log_det_k += 2.0 * std::log(Matrix(llt.matrixL())(i, i));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < xs.rows(); ++i) {
      Vector d = xs.row(i).transpose() - m2;
      const double r = d.dot(kmat * d);
      acc += (df + 3) * std::log1p(r / df);
    }
    return acc - static_cast<double>(xs.rows()) * log_det_k;
  };

  Vector start(3 + params.size());
  start.head(3) = xs.colwise().mean();
  Matrix cov = (xs.rowwise() - xs.colwise().mean()).transpose() *
               (xs.rowwise() - xs.colwise().mean()) / xs.rows();
  for (size_t a = 0; a < params.size(); ++a) {
    auto [i, j] = params[a];
    start(3 + a) = (i == j) ? 1.0 / cov(i, i) : 0.0;
  }
  Vector theta = testsupport::bfgs_minimize(objective, start, 1000, 1e-8);
  Matrix k_oracle = Matrix::Zero(3, 3);
  for (size_t a = 0; a < params.size(); ++a) {
    auto [i, j] = params[a];
    k_oracle(i, j) = theta(3 + a);
    k_oracle(j, i) = theta(3 + a);
  }
  Matrix s_oracle = k_oracle.inverse();

  CHECK((fit.location - theta.head(3)).cwiseAbs().maxCoeff() < 1e-5);
  CHECK((fit.scatter.mat() - s_oracle).cwiseAbs().maxCoeff() < 1e-5);
}
