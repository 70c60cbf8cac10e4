#pragma once

// Alternative calibrator: choose w so that the data-averaged KL gain of the
// power-w update matches the model-expected KL gain of the standard update,
//
//   n^-1 sum_i D{p_w(.|x_i), p}  =  integral D{p(.|x), p} f(x; theta_hat) dx,
//
// solved by bracketed root finding on the residual. Closed-form KL for the
// normal/normal pair, grid posterior + numerical integral otherwise.

#include <cmath>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "gbcal/errors.hpp"
#include "gbcal/fisher.hpp"
#include "gbcal/models.hpp"
#include "gbcal/numerics.hpp"
#include "gbcal/posterior.hpp"

namespace gbcal {

struct KlMatchProblem {
  Model model;
  Prior prior;
  Dataset data;
  RootBracket bracket{1e-4, 1e3};
  double tol = 1e-10;
  QuadratureSpec quad{};
  GridSpec grid{};
};

// KL divergence D{p_w(.|x), p} of the single-observation power posterior from
// the prior. Tends to 0 as w -> 0+ (posterior collapses onto the prior).
inline double kl_gain(const Model& model, const Prior& prior, double w, double x,
                      const GridSpec& grid = {}) {
  if (!(w > 0.0)) throw DomainError("kl_gain needs w > 0 for a proper power posterior");
  if (std::holds_alternative<NormalKnownVariance>(model) &&
      std::holds_alternative<NormalPrior>(prior)) {
    const double v = std::get<NormalKnownVariance>(model).variance;
    const auto& p = std::get<NormalPrior>(prior);
    const double rho = w / v + p.precision;
    const double mu = (w * x / v + p.precision * p.mean) / rho;
    const double d = mu - p.mean;
    return 0.5 * (std::log(rho / p.precision) + p.precision / rho + p.precision * d * d - 1.0);
  }
  // Generic path: tabulated posterior, trapezoid of q log(q/p). The ratio
  // q/p is bounded (it equals f^w/Z), so the integrand vanishes with q.
  const DensityGrid g = power_posterior_grid(model, prior, Dataset::from_values({x}), w, grid);
  std::vector<double> y(g.theta.size(), 0.0);
  for (std::size_t i = 0; i < g.theta.size(); ++i) {
    const double q = g.density[i];
    if (q <= 0.0) continue;
    const double pd = prior_density(prior, g.theta[i]);
    if (pd <= 0.0) continue;
    y[i] = q * (std::log(q) - std::log(pd));
  }
  const double val = trapezoid(g.theta, y);
  return val > 0.0 ? val : 0.0;
}

namespace detail {

// Model-expected KL gain of the standard update at the MLE: the right-hand
// side of the match. Truncated summation on count support, quadrature on
// continuous support.
inline double expected_standard_gain(const Model& model, const Prior& prior, double theta_hat,
                                     const QuadratureSpec& quad, const GridSpec& grid) {
  if (discrete_support(model)) {
    NeumaierSum sum, mass;
    const double cutoff = 1.0 - 1e-13;
    for (long x = 0; x < 200000; ++x) {
      const double p = density(model, static_cast<double>(x), theta_hat);
      sum.add(kl_gain(model, prior, 1.0, static_cast<double>(x), grid) * p);
      mass.add(p);
      if (mass.value() >= cutoff && static_cast<double>(x) > theta_hat) return sum.value();
    }
    throw ConvergenceError("count-support summation failed to reach its mass target", sum.value(),
                           1.0);
  }
  auto integrand = [&](double x) {
    return kl_gain(model, prior, 1.0, x, grid) * density(model, x, theta_hat);
  };
  const Interval sup = x_support(model);
  if (std::isinf(sup.lo) && std::isinf(sup.hi)) {
    const double scale = std::sqrt(model_variance(model, theta_hat));
    return integrate_real_line(integrand, theta_hat, scale, quad).value;
  }
  return integrate(integrand, sup.lo, sup.hi, quad).value;
}

}  // namespace detail

// Solve the KL match for w. The residual is checked for monotonicity on a
// coarse w-grid first; a violation aborts instead of returning a spurious
// root. The bracket expands geometrically (up to 3 times) if the residual
// does not change sign on the input bracket.
inline CalibrationResult kl_match_w(const KlMatchProblem& problem) {
  if (problem.data.n == 0) throw DegenerateDataError("cannot calibrate an empty dataset");
  if (!(problem.tol > 0.0)) throw DomainError("kl match tolerance must be positive");
  if (!(problem.bracket.lo > 0.0) || !(problem.bracket.lo < problem.bracket.hi)) {
    throw DomainError("kl match bracket must satisfy 0 < lo < hi");
  }
  const double theta_hat = mle(problem.model, problem.data);
  const double rhs = detail::expected_standard_gain(problem.model, problem.prior, theta_hat,
                                                    problem.quad, problem.grid);

  auto residual = [&](double w) {
    NeumaierSum s;
    for (double x : problem.data.values) {
      s.add(kl_gain(problem.model, problem.prior, w, x, problem.grid));
    }
    return s.value() / static_cast<double>(problem.data.n) - rhs;
  };

  double lo = problem.bracket.lo;
  double hi = problem.bracket.hi;
  double r_lo = residual(lo);
  double r_hi = residual(hi);
  int expansions = 0;
  while (r_lo * r_hi > 0.0 && expansions < 3) {
    lo *= 0.1;
    hi *= 10.0;
    r_lo = residual(lo);
    r_hi = residual(hi);
    ++expansions;
  }
  if (r_lo * r_hi > 0.0) {
    throw BracketError("kl match residual has no sign change on [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "] after 3 expansions (R(lo)=" +
                           std::to_string(r_lo) + ", R(hi)=" + std::to_string(r_hi) + ")",
                       r_lo, r_hi);
  }

  // Monotonicity screen on a geometric w-grid, then tighten the bracket to
  // the probed pair with the sign change.
  const int kProbes = 9;
  std::vector<double> ws{lo}, rs{r_lo};
  const double ratio = std::pow(hi / lo, 1.0 / (kProbes + 1.0));
  for (int i = 1; i <= kProbes; ++i) {
    ws.push_back(lo * std::pow(ratio, i));
    rs.push_back(residual(ws.back()));
  }
  ws.push_back(hi);
  rs.push_back(r_hi);
  for (std::size_t i = 1; i < ws.size(); ++i) {
    if (rs[i] < rs[i - 1] - 1e-9 * (1.0 + std::abs(rs[i - 1]))) {
      throw ConvergenceError("kl match residual is not increasing in w near w=" +
                                 std::to_string(ws[i]) + "; refusing to root-find",
                             ws[i - 1], std::abs(rs[i] - rs[i - 1]));
    }
  }
  double blo = lo, bhi = hi;
  for (std::size_t i = 1; i < ws.size(); ++i) {
    if (rs[i - 1] * rs[i] <= 0.0) {
      blo = ws[i - 1];
      bhi = ws[i];
      break;
    }
  }

  const double w_star = find_root(residual, {blo, bhi}, problem.tol);
  const double res = residual(w_star);
  if (std::abs(res) > problem.tol) {
    throw ConvergenceError("kl match residual above tolerance at the returned w", w_star,
                           std::abs(res));
  }

  CalibrationResult r;
  r.w_hat = w_star;
  r.numerator = w_star * w_star;  // no natural ratio for this method
  r.denominator = 1.0;
  r.method = CalibrationMethod::kl_numeric;
  r.diagnostics = {{"empirical_gain", res + rhs},
                   {"model_gain", rhs},
                   {"residual", res},
                   {"theta_hat", theta_hat},
                   {"n", static_cast<double>(problem.data.n)},
                   {"bracket_lo", blo},
                   {"bracket_hi", bhi}};
  return r;
}

}  // namespace gbcal
