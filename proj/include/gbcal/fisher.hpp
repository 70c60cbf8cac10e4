#pragma once

// Learning-rate calibration by matching prior-expected information gain,
// measured through the prior-weighted squared score
//
//   Delta(x) = integral p(theta) S(x,theta)^2 dtheta,
//
// with the calibrated power w^2 = E_model[Delta] / E_data[Delta]. Closed
// forms cover the Poisson and normal-known-variance models; a quadrature
// route covers natural families and doubles as an independent oracle.

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <variant>

#include "gbcal/errors.hpp"
#include "gbcal/models.hpp"
#include "gbcal/numerics.hpp"
#include "gbcal/posterior.hpp"

namespace gbcal {

enum class CalibrationMethod { fisher_closed_form, fisher_quadrature, kl_numeric };

inline const char* to_string(CalibrationMethod m) {
  switch (m) {
    case CalibrationMethod::fisher_closed_form:
      return "fisher-closed-form";
    case CalibrationMethod::fisher_quadrature:
      return "fisher-quadrature";
    case CalibrationMethod::kl_numeric:
      return "kl-numeric";
  }
  return "unknown";
}

// w_hat together with the matched ratio and every intermediate the method
// consumed. Invariant: w_hat = sqrt(numerator / denominator), both positive.
// The KL calibrator has no natural ratio, so it reports w_hat^2 / 1.
struct CalibrationResult {
  double w_hat = 1.0;
  double numerator = 1.0;
  double denominator = 1.0;
  CalibrationMethod method = CalibrationMethod::fisher_closed_form;
  std::map<std::string, double> diagnostics;
};

namespace detail {

inline void require_prior_within_domain(const Model& model, const Prior& prior) {
  const Interval md = theta_domain(model);
  const Interval ps = prior_support(prior);
  if (ps.lo < md.lo || ps.hi > md.hi) {
    throw MomentError("prior support extends outside the model's parameter domain");
  }
}

inline CalibrationResult make_ratio_result(double num, double den, CalibrationMethod method) {
  if (!(num > 0.0) || !(den > 0.0) || !std::isfinite(num) || !std::isfinite(den)) {
    throw DegenerateDataError("information-gain ratio is not positive and finite (numerator=" +
                              std::to_string(num) + ", denominator=" + std::to_string(den) + ")");
  }
  CalibrationResult r;
  r.numerator = num;
  r.denominator = den;
  r.w_hat = std::sqrt(num / den);
  r.method = method;
  return r;
}

}  // namespace detail

// Delta(x) via its closed form when the prior moments are available
// (Poisson: x^2 a - 2 x b + 1; normal: quadratic in the prior moments),
// otherwise by quadrature of the squared score against the prior.
inline double delta(const Model& model, const Prior& prior, double x,
                    const QuadratureSpec& spec = {}) {
  detail::require_prior_within_domain(model, prior);
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Poisson>) {
          if (x < 0.0) throw DomainError("poisson support is x >= 0");
          const InverseMoments im = prior_inverse_moments(prior);
          return x * x * im.a - 2.0 * x * im.b + 1.0;
        } else if constexpr (std::is_same_v<T, NormalKnownVariance>) {
          const double e1 = prior_mean(prior);
          const double e2 = prior_second_moment(prior);
          return (x * x - 2.0 * x * e1 + e2) / (m.variance * m.variance);
        } else {
          auto g = [&](double t) {
            const double s = score(model, x, t);
            return s * s;
          };
          return prior_expectation(prior, g, spec);
        }
      },
      model);
}

// Same integral with no closed-form shortcuts; the independent route used to
// cross-check the fast paths.
inline double delta_quadrature(const Model& model, const Prior& prior, double x,
                               const QuadratureSpec& spec = {}) {
  detail::require_prior_within_domain(model, prior);
  auto g = [&](double t) {
    const double s = score(model, x, t);
    return s * s;
  };
  return prior_expectation(prior, g, spec);
}

// Expected information gain of the power-w update from a single observation:
// I_w(x) = w^2 Delta(x).
inline double i_w(double w, const Model& model, const Prior& prior, double x,
                  const QuadratureSpec& spec = {}) {
  if (!(w > 0.0)) throw DomainError("i_w needs w > 0");
  return (w * w) * delta(model, prior, x, spec);
}

// Population-level w from the data-generating mean/variance (mu0, sigma0^2).
// Poisson: N = (mu0^2+mu0) a - 2 b mu0 + 1, D = a (mu0^2+sigma0^2) - 2 b mu0 + 1.
// Natural families: w^2 = (b''(theta0) + V) / (sigma0^2 + V) with theta0 the
// moment match b'(theta0) = mu0 and V the prior spread of the mean map.
inline CalibrationResult fisher_w_population(const Model& model, const Prior& prior, double mean0,
                                             double var0, const QuadratureSpec& spec = {}) {
  if (!(var0 >= 0.0) || !std::isfinite(mean0)) {
    throw DomainError("fisher_w_population needs finite mean0 and var0 >= 0");
  }
  detail::require_prior_within_domain(model, prior);
  return std::visit(
      [&](const auto& m) -> CalibrationResult {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Poisson>) {
          if (!(mean0 > 0.0)) throw DomainError("poisson needs mean0 > 0");
          const InverseMoments im = prior_inverse_moments(prior);
          const double num = (mean0 * mean0 + mean0) * im.a - 2.0 * im.b * mean0 + 1.0;
          const double den = im.a * (mean0 * mean0 + var0) - 2.0 * im.b * mean0 + 1.0;
          CalibrationResult r =
              detail::make_ratio_result(num, den, CalibrationMethod::fisher_closed_form);
          r.diagnostics = {{"a", im.a},       {"b", im.b},          {"mu0", mean0},
                           {"sigma0_sq", var0}, {"theta0", mean0}};
          return r;
        } else if constexpr (std::is_same_v<T, NormalKnownVariance>) {
          const double e1 = prior_mean(prior);
          const double e2 = prior_second_moment(prior);
          const double V = mean0 * mean0 - 2.0 * mean0 * e1 + e2;
          CalibrationResult r = detail::make_ratio_result(m.variance + V, var0 + V,
                                                          CalibrationMethod::fisher_closed_form);
          r.diagnostics = {{"V", V},        {"model_variance", m.variance}, {"mu0", mean0},
                           {"sigma0_sq", var0}, {"theta0", mean0}};
          return r;
        } else {
          const RootBracket br = detail::bracket_mean_map(m, mean0);
          auto g = [&](double t) { return m.mean_map(t) - mean0; };
          const double theta0 = find_root(g, br, 1e-10);
          auto dev = [&](double t) {
            const double d = mean0 - m.mean_map(t);
            return d * d;
          };
          const double V = prior_expectation(prior, dev, spec);
          CalibrationResult r = detail::make_ratio_result(
              m.variance_map(theta0) + V, var0 + V, CalibrationMethod::fisher_quadrature);
          r.diagnostics = {{"V", V}, {"mu0", mean0}, {"sigma0_sq", var0}, {"theta0", theta0}};
          return r;
        }
      },
      model);
}

// Plug-in estimate from data: the empirical distribution replaces f0 and the
// MLE replaces theta0. Matches fisher_w_population with (x_bar, S^2) plugged in.
inline CalibrationResult fisher_w_hat(const Model& model, const Prior& prior, const Dataset& data,
                                      const QuadratureSpec& spec = {}) {
  if (data.n == 0) throw DegenerateDataError("cannot calibrate an empty dataset");
  detail::require_prior_within_domain(model, prior);
  const double n = static_cast<double>(data.n);
  return std::visit(
      [&](const auto& m) -> CalibrationResult {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Poisson>) {
          const double theta_hat = mle(model, data);  // boundary data rejected here
          const double xb = data.mean, s2 = data.variance;
          const InverseMoments im = prior_inverse_moments(prior);
          const double num = im.a * (xb * xb + xb) - 2.0 * im.b * xb + 1.0;
          const double den = im.a * (xb * xb + s2) - 2.0 * im.b * xb + 1.0;
          CalibrationResult r =
              detail::make_ratio_result(num, den, CalibrationMethod::fisher_closed_form);
          r.diagnostics = {{"a", im.a},   {"b", im.b}, {"x_bar", xb},
                           {"s2", s2},    {"n", n},    {"theta_hat", theta_hat}};
          return r;
        } else if constexpr (std::is_same_v<T, NormalKnownVariance>) {
          const double xb = data.mean, s2 = data.variance;
          const double e1 = prior_mean(prior);
          const double e2 = prior_second_moment(prior);
          const double V = xb * xb - 2.0 * xb * e1 + e2;
          CalibrationResult r = detail::make_ratio_result(m.variance + V, s2 + V,
                                                          CalibrationMethod::fisher_closed_form);
          r.diagnostics = {{"V_hat", V}, {"model_variance", m.variance}, {"x_bar", xb},
                           {"s2", s2},   {"n", n},                       {"theta_hat", xb}};
          return r;
        } else {
          const double theta_hat = mle(model, data);
          const auto [tbar, s2t] = sufficient_moments(model, data);
          auto dev = [&](double t) {
            const double d = tbar - m.mean_map(t);
            return d * d;
          };
          const double V = prior_expectation(prior, dev, spec);
          CalibrationResult r = detail::make_ratio_result(
              m.variance_map(theta_hat) + V, s2t + V, CalibrationMethod::fisher_quadrature);
          r.diagnostics = {{"V_hat", V}, {"t_bar", tbar}, {"s2_t", s2t},
                           {"n", n},     {"theta_hat", theta_hat}};
          return r;
        }
      },
      model);
}

// Fully generic plug-in route:
//   w_hat^2 = E_{f(.;theta_hat)}[Delta] / (n^-1 sum_i Delta(x_i)),
// with Delta by quadrature, the numerator by truncated summation (count
// support) or quadrature (continuous support), and a compensated reduction
// for the denominator. Slower than the closed forms; used for models without
// a fast path and as the cross-check oracle.
inline CalibrationResult fisher_w_hat_generic(const Model& model, const Prior& prior,
                                              const Dataset& data, const QuadratureSpec& spec = {}) {
  if (data.n == 0) throw DegenerateDataError("cannot calibrate an empty dataset");
  const double theta_hat = mle(model, data);

  double num = 0.0;
  if (discrete_support(model)) {
    NeumaierSum sum, mass;
    const double cutoff = 1.0 - 1e-13;
    long x = 0;
    for (; x < 200000; ++x) {
      const double p = density(model, static_cast<double>(x), theta_hat);
      sum.add(delta_quadrature(model, prior, static_cast<double>(x), spec) * p);
      mass.add(p);
      if (mass.value() >= cutoff && static_cast<double>(x) > theta_hat) break;
    }
    if (mass.value() < cutoff) {
      throw ConvergenceError("count-support summation failed to reach its mass target", sum.value(),
                             1.0 - mass.value());
    }
    num = sum.value();
  } else {
    auto integrand = [&](double x) {
      return delta_quadrature(model, prior, x, spec) * density(model, x, theta_hat);
    };
    const Interval sup = x_support(model);
    if (std::isinf(sup.lo) && std::isinf(sup.hi)) {
      const double scale = std::sqrt(model_variance(model, theta_hat));
      num = integrate_real_line(integrand, theta_hat, scale, spec).value;
    } else {
      num = integrate(integrand, sup.lo, sup.hi, spec).value;
    }
  }

  NeumaierSum den_sum;
  for (double x : data.values) den_sum.add(delta_quadrature(model, prior, x, spec));
  const double den = den_sum.value() / static_cast<double>(data.n);

  CalibrationResult r = detail::make_ratio_result(num, den, CalibrationMethod::fisher_quadrature);
  r.diagnostics = {{"theta_hat", theta_hat},
                   {"x_bar", data.mean},
                   {"s2", data.variance},
                   {"n", static_cast<double>(data.n)}};
  return r;
}

// Marginal data density under model and prior: pbar(x) = integral f(x;theta) p(theta) dtheta.
inline double prior_predictive_density(const Model& model, const Prior& prior, double x,
                                       const QuadratureSpec& spec = {}) {
  detail::require_prior_within_domain(model, prior);
  auto g = [&](double t) { return density(model, x, t); };
  return prior_expectation(prior, g, spec);
}

// Fisher information distance between prior and standard (w=1) posterior for
// one observation, weighted by the posterior:
//   integral p(theta|x) S(x,theta)^2 dtheta.
// Its prior-predictive expectation equals the prior-expected Fisher
// information E_p[J(theta)] (= E_p[1/theta] for the Poisson model).
inline double posterior_weighted_score_square(const Model& model, const Prior& prior, double x,
                                              const QuadratureSpec& spec = {},
                                              const GridSpec& grid = {}) {
  detail::require_prior_within_domain(model, prior);
  if (std::holds_alternative<Poisson>(model) && std::holds_alternative<GammaPrior>(prior)) {
    const auto& p = std::get<GammaPrior>(prior);
    const double shape = p.shape + x;
    const double rate = p.rate + 1.0;
    if (shape <= 2.0) {
      throw MomentError("posterior inverse moments need shape + x > 2");
    }
    const double b_post = rate / (shape - 1.0);
    const double a_post = rate * rate / ((shape - 1.0) * (shape - 2.0));
    return x * x * a_post - 2.0 * x * b_post + 1.0;
  }
  if (std::holds_alternative<NormalKnownVariance>(model) &&
      std::holds_alternative<NormalPrior>(prior)) {
    const double v = std::get<NormalKnownVariance>(model).variance;
    const ConjugateParams cp =
        power_posterior_conjugate(model, prior, Dataset::from_values({x}), 1.0);
    const auto& np = std::get<NormalParams>(cp);
    const double d = x - np.mean;
    return (d * d + 1.0 / np.precision) / (v * v);
  }
  (void)spec;
  const DensityGrid g = power_posterior_grid(model, prior, Dataset::from_values({x}), 1.0, grid);
  std::vector<double> y(g.theta.size());
  for (std::size_t i = 0; i < g.theta.size(); ++i) {
    const double s = score(model, x, g.theta[i]);
    y[i] = s * s * g.density[i];
  }
  return trapezoid(g.theta, y);
}

}  // namespace gbcal
