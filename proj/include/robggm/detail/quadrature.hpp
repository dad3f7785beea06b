#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "../errors.hpp"

namespace robggm::detail {

// 15-point Kronrod extension of 7-point Gauss. Nodes and weights as
// tabulated in QUADPACK's dqk15.
inline constexpr double kKronrodNodes[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993944, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0};
inline constexpr double kKronrodWeights[8] = {
    0.02293532201052922, 0.06309209262997855, 0.1047900103222502,
    0.1406532597155259,  0.1690047266392679,  0.1903505780647854,
    0.2044329400752989,  0.2094821410847278};
inline constexpr double kGaussWeights[4] = {
    0.1294849661688697, 0.2797053914892767, 0.3818300505051189,
    0.4179591836734694};

struct PanelEstimate {
  double value;
  double error;
};

template <class F>
PanelEstimate gauss_kronrod_15(F&& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);

  double flo[7], fhi[7];
  const double fc = f(center);
  double resk = kKronrodWeights[7] * fc;
  double resg = kGaussWeights[3] * fc;
  double resabs = kKronrodWeights[7] * std::abs(fc);
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    flo[j] = f(center - dx);
    fhi[j] = f(center + dx);
    resk += kKronrodWeights[j] * (flo[j] + fhi[j]);
    resabs += kKronrodWeights[j] * (std::abs(flo[j]) + std::abs(fhi[j]));
    if (j % 2 == 1) resg += kGaussWeights[j / 2] * (flo[j] + fhi[j]);
  }

  const double mean = 0.5 * resk;
  double resasc = kKronrodWeights[7] * std::abs(fc - mean);
  for (int j = 0; j < 7; ++j)
    resasc +=
        kKronrodWeights[j] * (std::abs(flo[j] - mean) + std::abs(fhi[j] - mean));

  const double value = resk * half;
  resabs *= std::abs(half);
  resasc *= std::abs(half);

  // QUADPACK's error heuristic: sharpen |K15 - G7| against the total
  // variation estimate, then floor at roundoff level.
  double err = std::abs((resk - resg) * half);
  if (resasc != 0.0 && err != 0.0)
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  const double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps))
    err = std::max(err, 50.0 * eps * resabs);
  return {value, err};
}

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int panels = 0;
};

// Globally adaptive integration over [a, b]: repeatedly bisect the panel
// with the largest error estimate until the summed error drops below
// max(abs_tol, rel_tol * |value|). Panels stop being refined at the depth
// cap or at floating point resolution, so a divergent integrand ends with
// a large reported error instead of looping forever.
template <class F>
QuadratureResult integrate_adaptive(F&& f, double a, double b, double abs_tol,
                                    double rel_tol = 3e-13,
                                    int max_depth = 60,
                                    int max_panels = 5000) {
  struct Interval {
    double a, b, value, error;
    int depth;
    bool splittable;
  };
  auto make = [&](double lo, double hi, int depth) {
    PanelEstimate e = gauss_kronrod_15(f, lo, hi);
    const double width_floor =
        8.0 * std::numeric_limits<double>::epsilon() *
        std::max(std::abs(lo), std::abs(hi));
    return Interval{lo,    hi,
                    e.value, e.error,
                    depth, depth < max_depth && (hi - lo) > width_floor};
  };

  std::vector<Interval> panels{make(a, b, 0)};
  double total_value = panels[0].value;
  double total_error = panels[0].error;
  while (total_error > std::max(abs_tol, rel_tol * std::abs(total_value)) &&
         static_cast<int>(panels.size()) < max_panels) {
    size_t worst = panels.size();
    double emax = 0.0;
    for (size_t i = 0; i < panels.size(); ++i)
      if (panels[i].splittable && panels[i].error > emax) {
        emax = panels[i].error;
        worst = i;
      }
    if (worst == panels.size()) break;  // nothing left to refine

    Interval parent = panels[worst];
    const double mid = 0.5 * (parent.a + parent.b);
    Interval left = make(parent.a, mid, parent.depth + 1);
    Interval right = make(mid, parent.b, parent.depth + 1);
    panels[worst] = left;
    panels.push_back(right);
    total_value += left.value + right.value - parent.value;
    total_error += left.error + right.error - parent.error;
  }

  // Refresh the running sums; incremental updates drift a little.
  QuadratureResult total;
  total.panels = static_cast<int>(panels.size());
  for (const auto& iv : panels) {
    total.value += iv.value;
    total.error += iv.error;
  }
  return total;
}

// Integral of f over [0, inf) via the compactifying substitution
// r = (u / (1 - u))^4, dr = 4 u^3 / (1 - u)^5 du. The quartic power keeps
// the transformed integrand bounded for the heavy power-law tails of
// elliptical radial densities, where the plain u / (1 - u) map would put
// an endpoint singularity at u = 1.
template <class F>
QuadratureResult integrate_half_line(F&& f, double abs_tol) {
  auto g = [&f](double u) {
    const double om = 1.0 - u;
    // Nodes are interior in exact arithmetic, but deep subdivision can
    // round one onto the endpoint; a single point carries no mass.
    if (om <= 0.0 || u <= 0.0) return 0.0;
    const double ratio = u / om;
    const double r = ratio * ratio * ratio * ratio;
    if (!std::isfinite(r)) return 0.0;
    const double fv = f(r);
    if (fv == 0.0) return 0.0;  // avoid 0 * inf when the jacobian overflows
    const double om2 = om * om;
    return fv * 4.0 * (u * u * u) / (om2 * om2 * om);
  };
  return integrate_adaptive(g, 0.0, 1.0, abs_tol);
}

}  // namespace robggm::detail
