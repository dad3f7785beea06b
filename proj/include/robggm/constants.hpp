#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "detail/quadrature.hpp"
#include "detail/roots.hpp"
#include "errors.hpp"
#include "scatter.hpp"

namespace robggm {

// A query for the asymptotic behaviour of the scatter estimator:
//   p       dimension of the observations,
//   df_est  degrees of freedom the estimator is tuned to; inf is the
//           sample covariance, 0 the distribution-free shape-only
//           estimator that uses only directions,
//   df_data degrees of freedom of the elliptical t law generating the
//           data; inf means Gaussian data.
struct ConstantsQuery {
  int p;
  double df_est;
  double df_data;
};

inline void validate(const ConstantsQuery& q) {
  if (q.p < 2)
    throw InvalidQuery("constants: dimension must be at least 2, got " +
                       std::to_string(q.p));
  if (std::isnan(q.df_est) || q.df_est < 0.0)
    throw InvalidQuery("constants: estimator df must be >= 0 or infinite");
  if (std::isnan(q.df_data) || !(q.df_data > 0.0))
    throw InvalidQuery("constants: data df must be positive or infinite");
}

// Law of the squared Mahalanobis radius R under the data distribution:
// chi-square with p degrees of freedom for Gaussian data, p times an
// F(p, df_data) variable under elliptical t data.
struct RadialLaw {
  int p;
  double df_data;

  double log_density(double r) const {
    if (r < 0.0 || std::isinf(r))
      return -std::numeric_limits<double>::infinity();
    const double hp = 0.5 * p;
    double power_term;
    if (r == 0.0) {
      if (hp - 1.0 == 0.0)
        power_term = 0.0;
      else
        return -std::numeric_limits<double>::infinity();
    } else {
      power_term = (hp - 1.0) * std::log(r);
    }
    if (std::isinf(df_data))
      return power_term - 0.5 * r - hp * std::log(2.0) - std::lgamma(hp);
    const double hv = 0.5 * df_data;
    return std::lgamma(hp + hv) - std::lgamma(hp) - std::lgamma(hv) -
           hp * std::log(df_data) + power_term -
           (hp + hv) * std::log1p(r / df_data);
  }
};

// Derivatives of the estimator's loss rho(x) = (df + p) log(1 + x / df):
// psi = rho', phi(x) = x psi(x), and phi'. The df -> inf limits recover
// the Gaussian loss rho(x) = x.
struct LossDerivatives {
  double df;
  int p;

  double psi(double x) const {
    if (std::isinf(df)) return 1.0;
    return (df + p) / (df + x);
  }
  double phi(double x) const {
    if (std::isinf(df)) return x;
    return (df + p) * x / (df + x);
  }
  double phi_prime(double x) const {
    if (std::isinf(df)) return 1.0;
    const double d = df + x;
    return (df + p) * df / (d * d);
  }
};

// E f(R) with R distributed per the radial law, evaluated by adaptive
// quadrature on [0, inf). Divergent or badly-behaved moments surface as
// IntegrationFailure via the accumulated error estimate.
template <class F>
double radial_expectation(F&& f, const RadialLaw& law) {
  auto integrand = [&](double r) {
    const double ld = law.log_density(r);
    if (std::isinf(ld)) return 0.0;
    return f(r) * std::exp(ld);
  };
  auto q = detail::integrate_half_line(integrand, 1e-11);
  // The error ceiling is absolute for order-one results and proportional
  // for large ones (root bracketing probes integrals of size p / eta with
  // eta down to 1e-12, where an absolute ceiling is below roundoff).
  const double ceiling = std::max(1e-8, 1e-10 * std::abs(q.value));
  if (!(q.error <= ceiling) || !std::isfinite(q.value))
    throw IntegrationFailure(
        "radial expectation did not reach the error target (estimate " +
        std::to_string(q.error) + "); the moment may not exist for p = " +
        std::to_string(law.p) + ", data df = " + std::to_string(law.df_data));
  return q.value;
}

// Scale calibration of the scatter estimator under the data law: the root
// eta of E phi(R / eta) = p. At eta the estimator's scatter functional
// equals eta times the true shape matrix.
inline double find_eta(const ConstantsQuery& q) {
  validate(q);
  if (q.df_est == 0.0)
    throw InvalidQuery(
        "find_eta: the shape-only estimator carries no scale to calibrate");
  const RadialLaw law{q.p, q.df_data};
  const LossDerivatives loss{q.df_est, q.p};
  auto h = [&](double eta) {
    return radial_expectation([&](double r) { return loss.phi(r / eta); },
                              law) -
           q.p;
  };
  // h is decreasing in eta. Expand the default bracket geometrically by up
  // to a factor 1e6 on each side before giving up.
  double lo = 1e-6, hi = 1e6;
  double h_lo = h(lo), h_hi = h(hi);
  while (h_lo <= 0.0 && lo > 1.5e-12) {
    lo /= 10.0;
    h_lo = h(lo);
  }
  while (h_hi >= 0.0 && hi < 0.9e12) {
    hi *= 10.0;
    h_hi = h(hi);
  }
  if (h_lo <= 0.0 || h_hi >= 0.0)
    throw BracketFailure("find_eta: no sign change on [" + std::to_string(lo) +
                         ", " + std::to_string(hi) + "]");
  return detail::brent_root(h, lo, hi, 1e-12);
}

struct AsymptoticConstants {
  double eta;
  double gamma1;
  double gamma2;
  double sigma1;
  double sigma2;
};

namespace detail {

inline AsymptoticConstants constants_via_quadrature(const ConstantsQuery& q) {
  const double eta = find_eta(q);
  const RadialLaw law{q.p, q.df_data};
  const LossDerivatives loss{q.df_est, q.p};
  const double p = q.p;
  const double gamma1 =
      radial_expectation(
          [&](double r) {
            const double f = loss.phi(r / eta);
            return f * f;
          },
          law) /
      (p * (p + 2.0));
  const double gamma2 =
      radial_expectation(
          [&](double r) { return (r / eta) * loss.phi_prime(r / eta); }, law) /
      p;
  const double d = 2.0 * gamma2 + p;
  const double sigma1 = (p + 2.0) * (p + 2.0) * gamma1 / (d * d);
  const double sigma2 =
      (gamma1 - 1.0 -
       2.0 * gamma1 * (gamma2 - 1.0) * (p + (p + 4.0) * gamma2) / (d * d)) /
      (gamma2 * gamma2);
  return {eta, gamma1, gamma2, sigma1, sigma2};
}

}  // namespace detail

// Variance scaling of the shape part of the estimator. The deviance of a
// correctly specified graph is asymptotically sigma1 times a chi-square.
// For the shape-only estimator (df_est = 0) this is 1 + 2/p for every
// elliptical data law, no quadrature involved.
inline double find_sigma1(const ConstantsQuery& q) {
  validate(q);
  if (q.df_est == 0.0) return 1.0 + 2.0 / q.p;
  return detail::constants_via_quadrature(q).sigma1;
}

// Variance scaling of the scale part. Undefined for the shape-only
// estimator.
inline double find_sigma2(const ConstantsQuery& q) {
  validate(q);
  if (q.df_est == 0.0)
    throw InvalidQuery(
        "find_sigma2: the shape-only estimator has no scale component");
  return detail::constants_via_quadrature(q).sigma2;
}

// All constants in one sweep (one eta solve, two further expectations).
inline AsymptoticConstants asymptotic_constants(const ConstantsQuery& q) {
  validate(q);
  if (q.df_est == 0.0)
    throw InvalidQuery(
        "asymptotic_constants: use find_sigma1 for the shape-only estimator");
  return detail::constants_via_quadrature(q);
}

inline double find_eta(int p, double df_est, double df_data = kInfiniteDf) {
  return find_eta(ConstantsQuery{p, df_est, df_data});
}
inline double find_sigma1(int p, double df_est, double df_data = kInfiniteDf) {
  return find_sigma1(ConstantsQuery{p, df_est, df_data});
}
inline double find_sigma2(int p, double df_est, double df_data = kInfiniteDf) {
  return find_sigma2(ConstantsQuery{p, df_est, df_data});
}

// Normalizing constant of the p-variate t density with df degrees of
// freedom, Gamma((df + p) / 2) / ((df pi)^{p/2} Gamma(df / 2)); the
// df -> inf limit is the Gaussian constant (2 pi)^{-p/2}.
inline double log_t_density_constant(int p, double df) {
  if (p < 1) throw InvalidQuery("t_density_constant: dimension must be >= 1");
  if (std::isnan(df) || !(df > 0.0))
    throw InvalidQuery("t_density_constant: df must be positive or infinite");
  const double hp = 0.5 * p;
  const double pi = std::numbers::pi;
  if (std::isinf(df)) return -hp * std::log(2.0 * pi);
  return std::lgamma(hp + 0.5 * df) - hp * std::log(df * pi) -
         std::lgamma(0.5 * df);
}

inline double t_density_constant(int p, double df) {
  return std::exp(log_t_density_constant(p, df));
}

}  // namespace robggm
