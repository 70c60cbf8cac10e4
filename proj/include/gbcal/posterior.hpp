#pragma once

// Power posteriors p_w(theta | x_1..x_n) proportional to f(data;theta)^w p(theta):
// conjugate closed forms where they exist, log-space grid tabulation otherwise,
// and an L1 distance between tabulated densities.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gbcal/errors.hpp"
#include "gbcal/models.hpp"
#include "gbcal/numerics.hpp"

namespace gbcal {

struct GridSpec {
  std::size_t points = 2001;
  double sd_multiple = 8.0;
  // Explicit range override (both must be set to take effect).
  std::optional<double> lo;
  std::optional<double> hi;
};

struct DensityGrid {
  std::vector<double> theta;
  std::vector<double> density;
  double normalization_error = 0.0;

  double mean() const {
    std::vector<double> ty(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) ty[i] = theta[i] * density[i];
    return trapezoid(theta, ty);
  }
  double sd() const {
    const double m = mean();
    std::vector<double> ty(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double c = theta[i] - m;
      ty[i] = c * c * density[i];
    }
    return std::sqrt(std::max(0.0, trapezoid(theta, ty)));
  }
  double mode() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < density.size(); ++i) {
      if (density[i] > density[best]) best = i;
    }
    return theta[best];
  }
};

struct NormalParams {
  double mean = 0.0;
  double precision = 1.0;
};

struct GammaParams {
  double shape = 1.0;
  double rate = 1.0;
};

using ConjugateParams = std::variant<NormalParams, GammaParams>;

inline double conjugate_mean(const ConjugateParams& p) {
  if (const auto* n = std::get_if<NormalParams>(&p)) return n->mean;
  const auto& g = std::get<GammaParams>(p);
  return g.shape / g.rate;
}

inline double conjugate_sd(const ConjugateParams& p) {
  if (const auto* n = std::get_if<NormalParams>(&p)) return 1.0 / std::sqrt(n->precision);
  const auto& g = std::get<GammaParams>(p);
  return std::sqrt(g.shape) / g.rate;
}

inline double conjugate_log_density(const ConjugateParams& p, double theta) {
  if (const auto* n = std::get_if<NormalParams>(&p)) {
    const double d = theta - n->mean;
    return 0.5 * std::log(n->precision / (2.0 * M_PI)) - 0.5 * n->precision * d * d;
  }
  const auto& g = std::get<GammaParams>(p);
  if (theta <= 0.0) return -kInf;
  return g.shape * std::log(g.rate) - std::lgamma(g.shape) + (g.shape - 1.0) * std::log(theta) -
         g.rate * theta;
}

// Closed-form power posterior for the two shipped conjugate pairs.
// w = 0 returns the prior parameters; w = 1 is the standard Bayes update.
inline ConjugateParams power_posterior_conjugate(const Model& model, const Prior& prior,
                                                 const Dataset& data, double w) {
  if (w < 0.0 || !std::isfinite(w)) throw DomainError("power posterior needs w >= 0");
  const double n = static_cast<double>(data.n);
  const double sum_x = data.mean * n;
  if (std::holds_alternative<NormalKnownVariance>(model) &&
      std::holds_alternative<NormalPrior>(prior)) {
    const double v = std::get<NormalKnownVariance>(model).variance;
    const auto& p = std::get<NormalPrior>(prior);
    NormalParams post;
    post.precision = w * n / v + p.precision;
    post.mean = (w * sum_x / v + p.precision * p.mean) / post.precision;
    return post;
  }
  if (std::holds_alternative<Poisson>(model) && std::holds_alternative<GammaPrior>(prior)) {
    const auto& p = std::get<GammaPrior>(prior);
    GammaParams post;
    post.shape = p.shape + w * sum_x;
    post.rate = p.rate + w * n;
    return post;
  }
  throw UnsupportedPairError("no conjugate closed form for this model/prior pair; use the grid path");
}

// theta-dependent part of log f(data; theta); constants drop out of the
// normalized grid.
inline double log_likelihood_kernel(const Model& model, const Dataset& data, double theta) {
  detail::require_theta(model, theta, "log_likelihood_kernel");
  const double n = static_cast<double>(data.n);
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Poisson>) {
          return data.mean * n * std::log(theta) - n * theta;
        } else if constexpr (std::is_same_v<T, NormalKnownVariance>) {
          const double d = data.mean - theta;
          return -0.5 * n * (data.variance + d * d) / m.variance;
        } else {
          NeumaierSum ts;
          for (double x : data.values) ts.add(detail::natural_t(m, x));
          return theta * ts.value() - n * m.log_normalizer(theta);
        }
      },
      model);
}

namespace detail {

inline Interval posterior_domain(const Model& model, const Prior& prior) {
  const Interval md = theta_domain(model);
  const Interval ps = prior_support(prior);
  Interval dom{std::max(md.lo, ps.lo), std::min(md.hi, ps.hi)};
  if (!(dom.lo < dom.hi)) {
    throw DomainError("model parameter domain and prior support do not overlap");
  }
  return dom;
}

// Centre/scale for the grid: conjugate moments when available, otherwise a
// coarse-scan + golden-section Laplace approximation of the log posterior.
inline std::pair<double, double> grid_center_scale(const Model& model, const Prior& prior,
                                                   const Dataset& data, double w,
                                                   const Interval& dom) {
  try {
    const ConjugateParams cp = power_posterior_conjugate(model, prior, data, w);
    return {conjugate_mean(cp), conjugate_sd(cp)};
  } catch (const UnsupportedPairError&) {
  }

  auto logpost = [&](double t) -> double {
    const double lp = prior_log_density(prior, t);
    if (!std::isfinite(lp)) return -kInf;
    return w * log_likelihood_kernel(model, data, t) + lp;
  };

  // Scan window: data and prior locations padded by their scales.
  double guess = prior_mean(prior);
  double spread = std::sqrt(std::max(prior_variance(prior), 1e-12));
  if (dom.contains(data.mean)) {
    guess = 0.5 * (guess + data.mean);
    spread = std::max(spread, std::sqrt(data.variance / static_cast<double>(data.n)) + 1e-12);
  }
  double lo = std::max(dom.lo, guess - 12.0 * spread);
  double hi = std::min(dom.hi, guess + 12.0 * spread);
  if (std::isfinite(dom.lo) && lo <= dom.lo) lo = dom.lo + 1e-10 * (hi - dom.lo);
  if (!(lo < hi)) {
    lo = std::isfinite(dom.lo) ? dom.lo + 1e-10 : guess - 1.0;
    hi = std::isfinite(dom.hi) ? dom.hi - 1e-10 : guess + 1.0;
  }

  const int kScan = 512;
  double best_t = lo, best_v = -kInf;
  for (int i = 0; i <= kScan; ++i) {
    const double t = lo + (hi - lo) * i / kScan;
    const double v = logpost(t);
    if (v > best_v) {
      best_v = v;
      best_t = t;
    }
  }
  if (!std::isfinite(best_v)) {
    throw DegenerateDataError("log posterior is -inf over the whole scan window");
  }
  // Golden-section refinement around the scan winner.
  double a = std::max(lo, best_t - (hi - lo) / kScan);
  double b = std::min(hi, best_t + (hi - lo) / kScan);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 120 && (b - a) > 1e-12 * (1.0 + std::abs(a)); ++it) {
    const double c1 = b - gr * (b - a);
    const double c2 = a + gr * (b - a);
    if (logpost(c1) < logpost(c2)) {
      a = c1;
    } else {
      b = c2;
    }
  }
  const double mode = 0.5 * (a + b);
  const double h = std::max(1e-6, 1e-5 * std::abs(mode));
  const double second = (logpost(mode + h) - 2.0 * logpost(mode) + logpost(mode - h)) / (h * h);
  double sd = second < 0.0 ? 1.0 / std::sqrt(-second) : spread;
  if (!std::isfinite(sd) || sd <= 0.0) sd = spread;
  return {mode, sd};
}

}  // namespace detail

// Normalized tabulation of f(data;theta)^w p(theta) on a grid covering the
// posterior mean +- sd_multiple standard deviations (clipped to the domain).
// Evaluation is in log space with max subtraction, so long products cannot
// underflow.
inline DensityGrid power_posterior_grid(const Model& model, const Prior& prior, const Dataset& data,
                                        double w, const GridSpec& spec = {}) {
  if (w < 0.0 || !std::isfinite(w)) throw DomainError("power posterior needs w >= 0");
  if (spec.points < 8) throw DomainError("grid needs at least 8 points");
  const Interval dom = detail::posterior_domain(model, prior);

  double lo, hi;
  if (spec.lo && spec.hi) {
    lo = *spec.lo;
    hi = *spec.hi;
    if (!(lo < hi)) throw DomainError("grid range override needs lo < hi");
  } else {
    const auto [center, sd] = detail::grid_center_scale(model, prior, data, w, dom);
    lo = center - spec.sd_multiple * sd;
    hi = center + spec.sd_multiple * sd;
  }
  lo = std::max(lo, dom.lo);
  hi = std::min(hi, dom.hi);
  if (std::isfinite(dom.lo) && lo <= dom.lo) lo = dom.lo + 1e-12 * (hi - dom.lo);
  if (std::isfinite(dom.hi) && hi >= dom.hi) hi = dom.hi - 1e-12 * (hi - lo);
  if (!(lo < hi)) throw DomainError("degenerate grid range");

  DensityGrid g;
  g.theta.resize(spec.points);
  g.density.resize(spec.points);
  const double step = (hi - lo) / static_cast<double>(spec.points - 1);
  std::vector<double> logpost(spec.points);
  double max_lp = -kInf;
  for (std::size_t i = 0; i < spec.points; ++i) {
    const double t = lo + step * static_cast<double>(i);
    g.theta[i] = t;
    const double lp = prior_log_density(prior, t);
    double v = -kInf;
    if (std::isfinite(lp)) {
      v = w * log_likelihood_kernel(model, data, t) + lp;
    }
    logpost[i] = v;
    max_lp = std::max(max_lp, v);
  }
  if (!std::isfinite(max_lp)) {
    throw DegenerateDataError("unnormalized posterior vanishes on the whole grid");
  }
  for (std::size_t i = 0; i < spec.points; ++i) {
    g.density[i] = std::isfinite(logpost[i]) ? std::exp(logpost[i] - max_lp) : 0.0;
  }
  const double z = trapezoid(g.theta, g.density);
  if (!(z > 0.0) || !std::isfinite(z)) {
    throw DegenerateDataError("unnormalized posterior has zero mass on the grid");
  }
  for (double& d : g.density) d /= z;
  g.normalization_error = std::abs(trapezoid(g.theta, g.density) - 1.0);
  return g;
}

// Tabulate a closed-form conjugate density on an explicit or auto grid.
inline DensityGrid tabulate_conjugate(const ConjugateParams& params, const GridSpec& spec = {}) {
  double lo, hi;
  if (spec.lo && spec.hi) {
    lo = *spec.lo;
    hi = *spec.hi;
  } else {
    const double m = conjugate_mean(params);
    const double s = conjugate_sd(params);
    lo = m - spec.sd_multiple * s;
    hi = m + spec.sd_multiple * s;
  }
  if (std::holds_alternative<GammaParams>(params)) lo = std::max(lo, 1e-300);
  if (!(lo < hi) || spec.points < 8) throw DomainError("bad grid for conjugate tabulation");
  DensityGrid g;
  g.theta.resize(spec.points);
  g.density.resize(spec.points);
  const double step = (hi - lo) / static_cast<double>(spec.points - 1);
  for (std::size_t i = 0; i < spec.points; ++i) {
    g.theta[i] = lo + step * static_cast<double>(i);
    const double ld = conjugate_log_density(params, g.theta[i]);
    g.density[i] = std::isfinite(ld) ? std::exp(ld) : 0.0;
  }
  const double z = trapezoid(g.theta, g.density);
  if (!(z > 0.0)) throw DegenerateDataError("conjugate tabulation has zero mass on the grid");
  for (double& d : g.density) d /= z;
  g.normalization_error = std::abs(trapezoid(g.theta, g.density) - 1.0);
  return g;
}

namespace detail {

inline double interp_or_zero(const DensityGrid& g, double t) {
  if (t < g.theta.front() || t > g.theta.back()) return 0.0;
  const auto it = std::upper_bound(g.theta.begin(), g.theta.end(), t);
  std::size_t j = static_cast<std::size_t>(it - g.theta.begin());
  if (j == 0) return g.density.front();
  if (j >= g.theta.size()) return g.density.back();
  const std::size_t i = j - 1;
  const double u = (t - g.theta[i]) / (g.theta[j] - g.theta[i]);
  return g.density[i] + u * (g.density[j] - g.density[i]);
}

}  // namespace detail

// L1 distance between two tabulated densities, resampling onto the merged
// grid by linear interpolation (densities are 0 outside their own grids).
// Two unit-mass densities with disjoint support are at distance 2.
inline double density_distance(const DensityGrid& g1, const DensityGrid& g2) {
  std::vector<double> merged;
  merged.reserve(g1.theta.size() + g2.theta.size());
  merged.insert(merged.end(), g1.theta.begin(), g1.theta.end());
  merged.insert(merged.end(), g2.theta.begin(), g2.theta.end());
  std::sort(merged.begin(), merged.end());
  merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
  std::vector<double> diff(merged.size());
  for (std::size_t i = 0; i < merged.size(); ++i) {
    diff[i] = std::abs(detail::interp_or_zero(g1, merged[i]) - detail::interp_or_zero(g2, merged[i]));
  }
  return trapezoid(merged, diff);
}

}  // namespace gbcal
