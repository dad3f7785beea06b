#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <robggm/constants.hpp>
#include <robggm/detail/quadrature.hpp>
#include <robggm/detail/roots.hpp>

#include "support/rng.hpp"

using robggm::AsymptoticConstants;
using robggm::ConstantsQuery;
using robggm::LossDerivatives;
using robggm::RadialLaw;
using robggm::kInfiniteDf;

TEST_CASE("radial densities integrate to one", "[constants]") {
  for (int p : {2, 3, 5, 8, 50}) {
    for (double df : {3.0, 7.5, kInfiniteDf}) {
      RadialLaw law{p, df};
      CHECK(robggm::radial_expectation([](double) { return 1.0; }, law) ==
            Catch::Approx(1.0).margin(1e-9));
    }
  }
}

TEST_CASE("radial first moments", "[constants]") {
  // Chi-square with p degrees of freedom has mean p.
  for (int p : {2, 4, 9}) {
    RadialLaw law{p, kInfiniteDf};
    CHECK(robggm::radial_expectation([](double r) { return r; }, law) ==
          Catch::Approx(static_cast<double>(p)).margin(1e-8));
    CHECK(robggm::radial_expectation([](double r) { return r * r; }, law) ==
          Catch::Approx(static_cast<double>(p) * (p + 2)).margin(1e-6));
  }
  // p times an F(p, nu) variable has mean p * nu / (nu - 2).
  RadialLaw law{4, 5.0};
  CHECK(robggm::radial_expectation([](double r) { return r; }, law) ==
        Catch::Approx(20.0 / 3.0).margin(1e-8));
}

TEST_CASE("divergent moments surface as integration failures", "[constants]") {
  // Under 3 data df the fourth moment (r^2 of the squared radius) blows up.
  RadialLaw law{8, 3.0};
  CHECK_THROWS_AS(
      robggm::radial_expectation([](double r) { return r * r; }, law),
      robggm::IntegrationFailure);
}

TEST_CASE("eta is one when the estimator matches the data law", "[constants]") {
  for (int p : {2, 4, 8})
    for (double df : {1.0, 3.0, 5.0})
      CHECK(robggm::find_eta(ConstantsQuery{p, df, df}) ==
            Catch::Approx(1.0).margin(1e-9));

  // Gaussian loss on Gaussian data.
  for (int p : {2, 5, 8})
    CHECK(robggm::find_eta(ConstantsQuery{p, kInfiniteDf, kInfiniteDf}) ==
          Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("sample covariance calibration under t data", "[constants]") {
  // The sample covariance estimates nu/(nu-2) times the scatter matrix.
  for (double nu : {5.0, 8.0, 12.0})
    for (int p : {3, 6})
      CHECK(robggm::find_eta(ConstantsQuery{p, kInfiniteDf, nu}) ==
            Catch::Approx(nu / (nu - 2.0)).margin(1e-8));
}

TEST_CASE("frozen eta values under Gaussian data", "[constants]") {
  // Cross-checked against an independent adaptive quadrature and root
  // finder at build-tool development time.
  CHECK(robggm::find_eta(ConstantsQuery{4, 3.0, kInfiniteDf}) ==
        Catch::Approx(0.749428265229).margin(1e-9));
  CHECK(robggm::find_eta(ConstantsQuery{5, 3.0, kInfiniteDf}) ==
        Catch::Approx(0.774793964284).margin(1e-9));
  CHECK(robggm::find_eta(ConstantsQuery{8, 3.0, kInfiniteDf}) ==
        Catch::Approx(0.828439208077).margin(1e-9));
}

TEST_CASE("eta solves its defining equation, checked by sampling",
          "[constants]") {
  testsupport::Rng rng(61);
  const int p = 8;
  const LossDerivatives loss{3.0, p};

  // Gaussian data: R is chi-square with 8 df.
  const double eta_g = robggm::find_eta(ConstantsQuery{p, 3.0, kInfiniteDf});
  double mean = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) mean += loss.phi(rng.chi_sq(p) / eta_g);
  mean /= n;
  CHECK(mean == Catch::Approx(static_cast<double>(p)).margin(0.05));

  // Elliptical t data with 5 df: R = chi2_p * (df / chi2_df).
  const double eta_t = robggm::find_eta(ConstantsQuery{p, 3.0, 5.0});
  mean = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = rng.chi_sq(p) * 5.0 / rng.chi_sq(5);
    mean += loss.phi(r / eta_t);
  }
  mean /= n;
  CHECK(mean == Catch::Approx(static_cast<double>(p)).margin(0.05));
}

TEST_CASE("matched-df constants have closed forms", "[constants]") {
  // With df_est = df_data = nu, the ratio R/(nu + R) is Beta distributed
  // and the two spectral moments reduce to
  //   gamma1 = (nu + p) / (nu + p + 2),  gamma2 = nu / (nu + p + 2).
  for (int p : {2, 4, 8}) {
    for (double nu : {1.0, 3.0, 5.0}) {
      const AsymptoticConstants c =
          robggm::asymptotic_constants(ConstantsQuery{p, nu, nu});
      const double g1 = (nu + p) / (nu + p + 2.0);
      const double g2 = nu / (nu + p + 2.0);
      CHECK(c.gamma1 == Catch::Approx(g1).margin(1e-9));
      CHECK(c.gamma2 == Catch::Approx(g2).margin(1e-9));
      const double d = 2.0 * g2 + p;
      CHECK(c.sigma1 ==
            Catch::Approx((p + 2.0) * (p + 2.0) * g1 / (d * d)).margin(1e-9));
    }
  }
  // Worked instances of the same identities.
  CHECK(robggm::find_sigma1(ConstantsQuery{4, 3.0, 3.0}) ==
        Catch::Approx(9.0 / 7.0).margin(1e-9));
  CHECK(robggm::find_sigma2(ConstantsQuery{4, 3.0, 3.0}) ==
        Catch::Approx(6.0 / 7.0).margin(1e-9));
  CHECK(robggm::find_sigma1(ConstantsQuery{8, 3.0, 3.0}) ==
        Catch::Approx(13.0 / 11.0).margin(1e-9));
  CHECK(robggm::find_sigma2(ConstantsQuery{8, 3.0, 3.0}) ==
        Catch::Approx(26.0 / 33.0).margin(1e-9));
}

TEST_CASE("sample covariance constants under t data have closed forms",
          "[constants]") {
  // gamma1 = (nu-2)/(nu-4) (standardized fourth moment), gamma2 = 1, so
  // sigma1 = (nu-2)/(nu-4) and sigma2 = 2/(nu-4).
  for (double nu : {5.0, 8.0, 12.0}) {
    for (int p : {3, 6}) {
      const AsymptoticConstants c = robggm::asymptotic_constants(
          ConstantsQuery{p, kInfiniteDf, nu});
      CHECK(c.gamma2 == Catch::Approx(1.0).margin(1e-8));
      CHECK(c.sigma1 == Catch::Approx((nu - 2.0) / (nu - 4.0)).margin(1e-7));
      CHECK(c.sigma2 == Catch::Approx(2.0 / (nu - 4.0)).margin(1e-7));
    }
  }
  // Gaussian loss on Gaussian data: the chi-square reference needs no
  // correction at all.
  for (int p : {2, 5, 8}) {
    const AsymptoticConstants c = robggm::asymptotic_constants(
        ConstantsQuery{p, kInfiniteDf, kInfiniteDf});
    CHECK(c.eta == Catch::Approx(1.0).margin(1e-10));
    CHECK(c.sigma1 == Catch::Approx(1.0).margin(1e-10));
    CHECK(c.sigma2 == Catch::Approx(0.0).margin(1e-10));
  }
}

TEST_CASE("shape-only estimator has the distribution-free scaling",
          "[constants]") {
  for (int p : {2, 4, 8, 16}) {
    const double expected = 1.0 + 2.0 / p;
    for (double df_data : {3.0, 5.0, kInfiniteDf}) {
      CHECK(robggm::find_sigma1(ConstantsQuery{p, 0.0, df_data}) ==
            Catch::Approx(expected).margin(1e-12));
    }
  }
  CHECK(robggm::find_sigma1(ConstantsQuery{8, 0.0, kInfiniteDf}) == 1.25);
  CHECK_THROWS_AS(robggm::find_eta(ConstantsQuery{8, 0.0, kInfiniteDf}),
                  robggm::InvalidQuery);
  CHECK_THROWS_AS(robggm::find_sigma2(ConstantsQuery{8, 0.0, kInfiniteDf}),
                  robggm::InvalidQuery);
}

TEST_CASE("frozen sigma values under Gaussian data", "[constants]") {
  // Cross-checked against an independent quadrature implementation.
  struct Pin {
    int p;
    double sigma1;
  };
  for (const Pin& pin : {Pin{2, 1.183713301229}, Pin{3, 1.171805242034},
                         Pin{4, 1.160999864823}, Pin{5, 1.151184502922},
                         Pin{8, 1.126795540799}, Pin{10, 1.113965779518}}) {
    CHECK(robggm::find_sigma1(ConstantsQuery{pin.p, 3.0, kInfiniteDf}) ==
          Catch::Approx(pin.sigma1).margin(1e-8));
  }
  CHECK(robggm::find_sigma1(ConstantsQuery{8, 1.0, kInfiniteDf}) ==
        Catch::Approx(1.190750084082).margin(1e-8));
  CHECK(robggm::find_sigma2(ConstantsQuery{5, 3.0, kInfiniteDf}) ==
        Catch::Approx(0.060978566009).margin(1e-8));
  CHECK(robggm::find_sigma2(ConstantsQuery{8, 3.0, kInfiniteDf}) ==
        Catch::Approx(0.037757974693).margin(1e-8));
}

TEST_CASE("large estimator df approaches the Gaussian loss", "[constants]") {
  for (int p : {2, 5, 10})
    CHECK(robggm::find_sigma1(ConstantsQuery{p, 1e6, kInfiniteDf}) ==
          Catch::Approx(1.0).margin(1e-3));
}

TEST_CASE("constants are positive and coherent across a grid", "[constants]") {
  for (int p : {2, 3, 5, 8}) {
    for (double df_est : {1.0, 2.0, 3.0, 5.0, 10.0, kInfiniteDf}) {
      for (double df_data : {3.0, 5.0, 10.0, kInfiniteDf}) {
        // The sample covariance has no finite fourth moment under data df
        // at or below 4; that combination is checked separately below.
        if (std::isinf(df_est) && df_data <= 4.0) continue;
        const AsymptoticConstants c = robggm::asymptotic_constants(
            ConstantsQuery{p, df_est, df_data});
        INFO("p=" << p << " df_est=" << df_est << " df_data=" << df_data);
        CHECK(c.eta > 0.0);
        CHECK(c.sigma1 > 0.0);
        CHECK(std::isfinite(c.sigma1));
        CHECK(std::isfinite(c.sigma2));
        // Variance of tr(estimate)/p is eta^2 (2 sigma1 / p + sigma2) >= 0.
        CHECK(2.0 * c.sigma1 / p + c.sigma2 > -1e-12);
      }
    }
  }
  CHECK_THROWS_AS(
      robggm::asymptotic_constants(ConstantsQuery{8, kInfiniteDf, 3.0}),
      robggm::IntegrationFailure);
}

TEST_CASE("query validation", "[constants]") {
  CHECK_THROWS_AS(robggm::find_sigma1(ConstantsQuery{1, 3.0, kInfiniteDf}),
                  robggm::InvalidQuery);
  CHECK_THROWS_AS(robggm::find_sigma1(ConstantsQuery{4, -1.0, kInfiniteDf}),
                  robggm::InvalidQuery);
  CHECK_THROWS_AS(robggm::find_sigma1(ConstantsQuery{4, 3.0, 0.0}),
                  robggm::InvalidQuery);
  CHECK_THROWS_AS(robggm::find_sigma1(ConstantsQuery{4, 3.0, -2.0}),
                  robggm::InvalidQuery);
}

TEST_CASE("convenience overloads default to Gaussian data", "[constants]") {
  CHECK(robggm::find_sigma1(8, 3.0) ==
        robggm::find_sigma1(ConstantsQuery{8, 3.0, kInfiniteDf}));
  CHECK(robggm::find_eta(5, 3.0) ==
        robggm::find_eta(ConstantsQuery{5, 3.0, kInfiniteDf}));
  CHECK(robggm::find_sigma2(5, 3.0, 5.0) ==
        robggm::find_sigma2(ConstantsQuery{5, 3.0, 5.0}));
}

TEST_CASE("t density normalizing constant", "[constants]") {
  CHECK(robggm::t_density_constant(1, 1.0) ==
        Catch::Approx(1.0 / std::numbers::pi).margin(1e-12));
  CHECK(std::isfinite(robggm::log_t_density_constant(50, 3.0)));
  CHECK(robggm::t_density_constant(2, kInfiniteDf) ==
        Catch::Approx(1.0 / (2.0 * std::numbers::pi)).margin(1e-14));

  // The bivariate t density with 4 df integrates to one in polar form:
  // int_0^inf c * (1 + r^2/4)^{-3} * 2 pi r dr = 1.
  const double c = robggm::t_density_constant(2, 4.0);
  auto q = robggm::detail::integrate_half_line(
      [c](double r) {
        const double base = 1.0 + r * r / 4.0;
        return c * 2.0 * std::numbers::pi * r / (base * base * base);
      },
      1e-12);
  CHECK(q.value == Catch::Approx(1.0).margin(1e-9));

  CHECK_THROWS_AS(robggm::t_density_constant(0, 3.0), robggm::InvalidQuery);
  CHECK_THROWS_AS(robggm::t_density_constant(2, 0.0), robggm::InvalidQuery);
}

TEST_CASE("root bracketing rejects same-sign endpoints", "[constants]") {
  auto f = [](double x) { return x * x + 1.0; };
  CHECK_THROWS_AS(robggm::detail::brent_root(f, -1.0, 1.0, 1e-12),
                  robggm::BracketFailure);
  auto g = [](double x) { return x - 0.25; };
  CHECK(robggm::detail::brent_root(g, 0.0, 1.0, 1e-14) ==
        Catch::Approx(0.25).margin(1e-12));
}
