#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "matrix.hpp"

namespace robggm {

inline constexpr double kInfiniteDf = std::numeric_limits<double>::infinity();

// Observations in rows, variables in columns. Column names are optional
// and travel along so downstream output can label matrices.
class DataMatrix {
 public:
  explicit DataMatrix(Matrix values, std::vector<std::string> column_names = {})
      : values_(std::move(values)), column_names_(std::move(column_names)) {
    if (values_.rows() < 1 || values_.cols() < 1)
      throw DimensionMismatch("data matrix must be non-empty");
    if (!column_names_.empty() &&
        static_cast<Eigen::Index>(column_names_.size()) != values_.cols())
      throw DimensionMismatch("data matrix: " +
                              std::to_string(column_names_.size()) +
                              " column names for " +
                              std::to_string(values_.cols()) + " columns");
    if (!values_.allFinite())
      throw Error(ErrorKind::user, "non_finite_data",
                  "data matrix contains a non-finite entry");
    if (column_names_.empty()) {
      column_names_.reserve(values_.cols());
      for (Eigen::Index j = 0; j < values_.cols(); ++j)
        column_names_.push_back("V" + std::to_string(j + 1));
    }
  }

  Eigen::Index n() const { return values_.rows(); }
  Eigen::Index p() const { return values_.cols(); }
  const Matrix& values() const { return values_; }
  const std::vector<std::string>& column_names() const { return column_names_; }

 private:
  Matrix values_;
  std::vector<std::string> column_names_;
};

// Squared Mahalanobis distance (x - mu)^T S^{-1} (x - mu), computed from a
// Cholesky factor of S as a triangular solve plus squared norm.
inline double mahalanobis_sq(const Vector& x, const Vector& mu,
                             const CholeskyFactor& chol) {
  if (x.size() != mu.size() || x.size() != chol.dim())
    throw DimensionMismatch("mahalanobis_sq: inconsistent dimensions");
  Vector z = chol.lower().triangularView<Eigen::Lower>().solve(x - mu);
  return z.squaredNorm();
}

inline double mahalanobis_sq(const Vector& x, const Vector& mu,
                             const SymMatrix& s) {
  return mahalanobis_sq(x, mu, cholesky(s));
}

// Downweighting function of the t-type estimator: observations at squared
// distance r get weight (df + p) / (df + r). df = inf means weight 1
// everywhere, i.e. the sample mean and covariance.
struct PsiWeights {
  double df;
  int dim;

  double operator()(double r) const {
    if (std::isinf(df)) return 1.0;
    return (df + dim) / (df + r);
  }
};

struct ScatterFit {
  Vector location;
  SymMatrix scatter;
  double df = kInfiniteDf;
  int iterations = 0;
  bool converged = false;
  double final_step = 0.0;  // last relative parameter change
  bool small_df = false;    // df <= 0.5: existence is delicate, flagged not fatal
};

// Objective whose stationary points the fixed-point iteration targets:
//   sum_i rho(r_i) + n * logdet(S),  rho(x) = (df + p) * log(1 + x / df),
// with r_i the squared Mahalanobis distances. In the df -> inf limit rho
// degenerates to the identity and the minimizer is the sample mean and
// covariance with denominator n.
inline double t_objective(const DataMatrix& x, const Vector& mu,
                          const SymMatrix& s, double df) {
  if (!(df > 0.0) && !std::isinf(df))
    throw InvalidQuery("t_objective: df must be positive or infinite");
  const Eigen::Index n = x.n();
  const Eigen::Index p = x.p();
  if (mu.size() != p || s.dim() != p)
    throw DimensionMismatch("t_objective: inconsistent dimensions");
  CholeskyFactor chol = cholesky(s);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = mahalanobis_sq(x.values().row(i).transpose(), mu, chol);
    acc += std::isinf(df) ? r
                          : (df + p) * std::log1p(r / df);
  }
  return acc + static_cast<double>(n) * chol.log_det();
}

// t-type M-estimator of location and scatter via the fixed-point iteration
//   mu   <- sum_i w_i x_i / sum_i w_i
//   S    <- (1/n) sum_i w_i (x_i - mu)(x_i - mu)^T,   w_i = psi(r_i),
// started from the sample mean and covariance. Each sweep is an EM step
// for the multivariate t, so the objective above decreases monotonically.
// Convergence is declared when the relative change of both mu and S drops
// below tol.
inline ScatterFit fit_t_m_estimator(const DataMatrix& x, double df,
                                    double tol = 1e-8, int max_iter = 500,
                                    std::vector<double>* objective_trace = nullptr) {
  if (!(df > 0.0) && !std::isinf(df))
    throw InvalidQuery("fit_t_m_estimator: df must be positive or infinite");
  const Eigen::Index n = x.n();
  const Eigen::Index p = x.p();
  if (n <= p)
    throw DegenerateData("fit_t_m_estimator: need n > p, got n = " +
                         std::to_string(n) + ", p = " + std::to_string(p));

  const Matrix& v = x.values();
  Vector mu = v.colwise().mean();
  Matrix centered = v.rowwise() - mu.transpose();
  Matrix s = (centered.transpose() * centered) / static_cast<double>(n);

  ScatterFit fit;
  fit.df = df;
  fit.small_df = (df <= 0.5) && !std::isinf(df);

  auto scatter_or_degenerate = [](const Matrix& m) {
    try {
      return cholesky(SymMatrix(m));
    } catch (const NotPositiveDefinite& e) {
      throw DegenerateData(std::string("scatter estimate is singular: ") +
                           e.what());
    }
  };

  CholeskyFactor chol = scatter_or_degenerate(s);
  if (objective_trace)
    objective_trace->push_back(t_objective(x, mu, SymMatrix(s), df));

  if (std::isinf(df)) {
    // Weights are identically 1: the start is already the estimate.
    fit.location = mu;
    fit.scatter = SymMatrix(s);
    fit.iterations = 0;
    fit.converged = true;
    fit.final_step = 0.0;
    return fit;
  }

  const PsiWeights psi{df, static_cast<int>(p)};
  const double tiny = std::numeric_limits<double>::min();
  for (int iter = 1; iter <= max_iter; ++iter) {
    Vector mu_new = Vector::Zero(p);
    double wsum = 0.0;
    Vector w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = mahalanobis_sq(v.row(i).transpose(), mu, chol);
      w(i) = psi(r);
      wsum += w(i);
      mu_new += w(i) * v.row(i).transpose();
    }
    mu_new /= wsum;

    Matrix s_new = Matrix::Zero(p, p);
    for (Eigen::Index i = 0; i < n; ++i) {
      Vector d = v.row(i).transpose() - mu_new;
      s_new += w(i) * (d * d.transpose());
    }
    s_new /= static_cast<double>(n);

    const double scale = std::max(std::sqrt(s_new.trace() / p), tiny);
    const double dmu = (mu_new - mu).norm() /
                       std::max({mu_new.norm(), scale, tiny});
    const double ds = (s_new - s).cwiseAbs().maxCoeff() /
                      std::max(s_new.cwiseAbs().maxCoeff(), tiny);

    mu = mu_new;
    s = s_new;
    chol = scatter_or_degenerate(s);
    if (objective_trace)
      objective_trace->push_back(t_objective(x, mu, SymMatrix(s), df));

    fit.iterations = iter;
    fit.final_step = std::max(dmu, ds);
    if (fit.final_step < tol) {
      fit.converged = true;
      break;
    }
  }
  fit.location = mu;
  fit.scatter = SymMatrix(s);
  return fit;
}

}  // namespace robggm
