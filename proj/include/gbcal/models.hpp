#pragma once

// Single-parameter exponential-family sampling models and proper priors.
// Everything the calibration formulas consume lives here: score, mean map
// b', variance map b'', MLE, prior (inverse) moments.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "gbcal/errors.hpp"
#include "gbcal/numerics.hpp"

namespace gbcal {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Sampling models
// ---------------------------------------------------------------------------

// Counts x in {0,1,2,...}, rate theta > 0, pmf theta^x e^{-theta} / x!.
struct Poisson {};

// Real x, mean theta, known variance. Score is (x - theta) / variance.
struct NormalKnownVariance {
  double variance = 1.0;
};

// Natural exponential family f(x;theta) = c(x) exp{theta * t(x) - b(theta)}.
// log_base (= log c) is optional; without it only score/MLE/calibration work,
// not densities.
struct NaturalFamily {
  std::function<double(double)> log_normalizer;  // b
  std::function<double(double)> mean_map;        // b'
  std::function<double(double)> variance_map;    // b''
  std::function<double(double)> sufficient_stat; // t; identity if empty
  std::function<double(double)> log_base;        // log c; may be empty
  Interval theta_domain{-kInf, kInf};
  Interval x_domain{-kInf, kInf};
  bool discrete_support = false;
};

using Model = std::variant<Poisson, NormalKnownVariance, NaturalFamily>;

inline Interval theta_domain(const Model& model) {
  return std::visit(
      [](const auto& m) -> Interval {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Poisson>) {
          return {0.0, kInf};
        } else if constexpr (std::is_same_v<T, NormalKnownVariance>) {
          return {-kInf, kInf};
        } else {
          return m.theta_domain;
        }
      },
      model);
}

inline bool discrete_support(const Model& model) {
  return std::visit(
      [](const auto& m) -> bool {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Poisson>) {
          return true;
        } else if constexpr (std::is_same_v<T, NormalKnownVariance>) {
          return false;
        } else {
          return m.discrete_support;
        }
      },
      model);
}

inline Interval x_support(const Model& model) {
  return std::visit(
      [](const auto& m) -> Interval {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Poisson>) {
          return {-0.5, kInf};  // counts
        } else if constexpr (std::is_same_v<T, NormalKnownVariance>) {
          return {-kInf, kInf};
        } else {
          return m.x_domain;
        }
      },
      model);
}

namespace detail {
inline void require_theta(const Model& model, double theta, const char* who) {
  if (!theta_domain(model).contains(theta)) {
    throw DomainError(std::string(who) + ": theta=" + std::to_string(theta) +
                      " outside the model's parameter domain");
  }
}
inline double natural_t(const NaturalFamily& m, double x) {
  return m.sufficient_stat ? m.sufficient_stat(x) : x;
}
}  // namespace detail

inline double log_density(const Model& model, double x, double theta) {
  detail::require_theta(model, theta, "log_density");
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Poisson>) {
          if (x < 0.0) throw DomainError("poisson support is x >= 0");
          return x * std::log(theta) - theta - std::lgamma(x + 1.0);
        } else if constexpr (std::is_same_v<T, NormalKnownVariance>) {
          const double d = x - theta;
          return -0.5 * d * d / m.variance - 0.5 * std::log(2.0 * M_PI * m.variance);
        } else {
          if (!m.log_base) {
            throw EvaluationError("natural family has no log_base; density unavailable");
          }
          return m.log_base(x) + theta * detail::natural_t(m, x) - m.log_normalizer(theta);
        }
      },
      model);
}

inline double density(const Model& model, double x, double theta) {
  return std::exp(log_density(model, x, theta));
}

// d/dtheta log f(x; theta).
inline double score(const Model& model, double x, double theta) {
  detail::require_theta(model, theta, "score");
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Poisson>) {
          if (x < 0.0) throw DomainError("poisson support is x >= 0");
          return x / theta - 1.0;
        } else if constexpr (std::is_same_v<T, NormalKnownVariance>) {
          return (x - theta) / m.variance;
        } else {
          return detail::natural_t(m, x) - m.mean_map(theta);
        }
      },
      model);
}

// Variance of the sufficient statistic at theta (b'' for natural families).
inline double model_variance(const Model& model, double theta) {
  detail::require_theta(model, theta, "model_variance");
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Poisson>) {
          return theta;
        } else if constexpr (std::is_same_v<T, NormalKnownVariance>) {
          return m.variance;
        } else {
          return m.variance_map(theta);
        }
      },
      model);
}

// ---------------------------------------------------------------------------
// Data
// ---------------------------------------------------------------------------

// Observations plus cached sufficient statistics. Variance uses the 1/n
// convention so that n^-1 sums over the data match the cached moments.
struct Dataset {
  std::vector<double> values;
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;

  static Dataset from_values(std::vector<double> v) {
    if (v.empty()) throw DegenerateDataError("dataset must contain at least one value");
    Dataset d;
    d.n = v.size();
    NeumaierSum sum;
    for (double x : v) {
      if (!std::isfinite(x)) throw DomainError("dataset values must be finite");
      sum.add(x);
    }
    d.mean = sum.value() / static_cast<double>(d.n);
    NeumaierSum ss;
    for (double x : v) {
      const double c = x - d.mean;
      ss.add(c * c);
    }
    d.variance = ss.value() / static_cast<double>(d.n);
    d.values = std::move(v);
    return d;
  }
};

// ---------------------------------------------------------------------------
// Priors
// ---------------------------------------------------------------------------

struct GammaPrior {
  double shape = 1.0;  // alpha
  double rate = 1.0;   // beta
};

struct NormalPrior {
  double mean = 0.0;
  double precision = 1.0;  // lambda
};

// Piecewise-linear density tabulated on a strictly increasing grid.
// Normalized at construction; zero outside [grid.front(), grid.back()].
struct TabulatedPrior {
  std::vector<double> grid;
  std::vector<double> values;

  static TabulatedPrior from_table(std::vector<double> g, std::vector<double> v) {
    if (g.size() != v.size() || g.size() < 2) {
      throw DomainError("tabulated prior needs two same-length arrays with >= 2 points");
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i]) || !std::isfinite(v[i]) || v[i] < 0.0) {
        throw DomainError("tabulated prior needs finite grid and non-negative values");
      }
      if (i > 0 && !(g[i] > g[i - 1])) {
        throw DomainError("tabulated prior grid must be strictly increasing");
      }
    }
    const double z = trapezoid(g, v);
    if (!(z > 0.0) || !std::isfinite(z)) {
      throw DomainError("tabulated prior has zero or non-finite mass");
    }
    TabulatedPrior p;
    p.grid = std::move(g);
    p.values = std::move(v);
    for (double& y : p.values) y /= z;
    return p;
  }

  double density(double theta) const {
    if (theta < grid.front() || theta > grid.back()) return 0.0;
    const auto it = std::upper_bound(grid.begin(), grid.end(), theta);
    const std::size_t j = std::min<std::size_t>(grid.size() - 1,
                                                static_cast<std::size_t>(it - grid.begin()));
    const std::size_t i = j == 0 ? 0 : j - 1;
    if (j == i) return values[i];
    const double t = (theta - grid[i]) / (grid[j] - grid[i]);
    return values[i] + t * (values[j] - values[i]);
  }
};

using Prior = std::variant<GammaPrior, NormalPrior, TabulatedPrior>;

inline Interval prior_support(const Prior& prior) {
  return std::visit(
      [](const auto& p) -> Interval {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GammaPrior>) {
          return {0.0, kInf};
        } else if constexpr (std::is_same_v<T, NormalPrior>) {
          return {-kInf, kInf};
        } else {
          return {p.grid.front(), p.grid.back()};
        }
      },
      prior);
}

inline double prior_log_density(const Prior& prior, double theta) {
  return std::visit(
      [theta](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GammaPrior>) {
          if (theta <= 0.0) return -kInf;
          return p.shape * std::log(p.rate) - std::lgamma(p.shape) +
                 (p.shape - 1.0) * std::log(theta) - p.rate * theta;
        } else if constexpr (std::is_same_v<T, NormalPrior>) {
          const double d = theta - p.mean;
          return 0.5 * std::log(p.precision / (2.0 * M_PI)) - 0.5 * p.precision * d * d;
        } else {
          const double v = p.density(theta);
          return v > 0.0 ? std::log(v) : -kInf;
        }
      },
      prior);
}

inline double prior_density(const Prior& prior, double theta) {
  if (const auto* tab = std::get_if<TabulatedPrior>(&prior)) {
    return tab->density(theta);
  }
  return std::exp(prior_log_density(prior, theta));
}

namespace detail {

// Expectation of g under a tabulated prior: 7-point Gauss-Legendre per grid
// segment, exact for the piecewise-linear density times smooth g.
inline double tabulated_expectation(const TabulatedPrior& p, const std::function<double(double)>& g) {
  static constexpr double nodes[4] = {0.0, 0.405845151377397167, 0.741531185599394440,
                                      0.949107912342758525};
  static constexpr double weights[4] = {0.417959183673469388, 0.381830050505118945,
                                        0.279705391489276668, 0.129484966168869693};
  NeumaierSum total;
  for (std::size_t i = 0; i + 1 < p.grid.size(); ++i) {
    const double a = p.grid[i], b = p.grid[i + 1];
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double seg = weights[0] * g(c) * p.density(c);
    for (int k = 1; k < 4; ++k) {
      const double xp = c + h * nodes[k];
      const double xm = c - h * nodes[k];
      seg += weights[k] * (g(xp) * p.density(xp) + g(xm) * p.density(xm));
    }
    total.add(seg * h);
  }
  return total.value();
}

}  // namespace detail

// E_p[g(theta)], closed form where available, otherwise quadrature against the
// prior density with a transform suited to the support.
inline double prior_expectation(const Prior& prior, const std::function<double(double)>& g,
                                const QuadratureSpec& spec = {}) {
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GammaPrior>) {
          auto integrand = [&](double t) { return g(t) * std::exp(prior_log_density(prior, t)); };
          return integrate(integrand, 0.0, kInf, spec).value;
        } else if constexpr (std::is_same_v<T, NormalPrior>) {
          auto integrand = [&](double t) { return g(t) * std::exp(prior_log_density(prior, t)); };
          return integrate_real_line(integrand, p.mean, 1.0 / std::sqrt(p.precision), spec).value;
        } else {
          return detail::tabulated_expectation(p, g);
        }
      },
      prior);
}

inline double prior_mean(const Prior& prior) {
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GammaPrior>) {
          return p.shape / p.rate;
        } else if constexpr (std::is_same_v<T, NormalPrior>) {
          return p.mean;
        } else {
          return detail::tabulated_expectation(p, [](double t) { return t; });
        }
      },
      prior);
}

inline double prior_second_moment(const Prior& prior) {
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GammaPrior>) {
          return p.shape * (p.shape + 1.0) / (p.rate * p.rate);
        } else if constexpr (std::is_same_v<T, NormalPrior>) {
          return 1.0 / p.precision + p.mean * p.mean;
        } else {
          return detail::tabulated_expectation(p, [](double t) { return t * t; });
        }
      },
      prior);
}

inline double prior_variance(const Prior& prior) {
  const double m = prior_mean(prior);
  return prior_second_moment(prior) - m * m;
}

// E[theta^-2] and E[theta^-1]. Both require support on theta > 0; the gamma
// closed forms exist only for shape > 2 (resp. > 1).
struct InverseMoments {
  double a = 0.0;  // E[theta^-2]
  double b = 0.0;  // E[theta^-1]
};

inline InverseMoments prior_inverse_moments(const Prior& prior) {
  const Interval sup = prior_support(prior);
  if (sup.lo < 0.0) {
    throw MomentError("inverse moments need a prior supported on theta > 0");
  }
  return std::visit(
      [&](const auto& p) -> InverseMoments {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GammaPrior>) {
          InverseMoments m;
          if (p.shape <= 1.0) {
            throw MomentError("E[theta^-1] does not exist for gamma shape <= 1 (shape=" +
                              std::to_string(p.shape) + ")");
          }
          m.b = p.rate / (p.shape - 1.0);
          if (p.shape <= 2.0) {
            throw MomentError("E[theta^-2] does not exist for gamma shape <= 2 (shape=" +
                              std::to_string(p.shape) + ")");
          }
          m.a = p.rate * p.rate / ((p.shape - 1.0) * (p.shape - 2.0));
          return m;
        } else if constexpr (std::is_same_v<T, NormalPrior>) {
          throw MomentError("inverse moments need a prior supported on theta > 0");
        } else {
          if (p.grid.front() <= 0.0) {
            throw MomentError("tabulated prior support must start at theta > 0 for inverse moments");
          }
          InverseMoments m;
          m.a = detail::tabulated_expectation(p, [](double t) { return 1.0 / (t * t); });
          m.b = detail::tabulated_expectation(p, [](double t) { return 1.0 / t; });
          return m;
        }
      },
      prior);
}

// ---------------------------------------------------------------------------
// Maximum likelihood
// ---------------------------------------------------------------------------

namespace detail {

// Bracket b'(theta) = target on the (open) domain by geometric expansion.
inline RootBracket bracket_mean_map(const NaturalFamily& m, double target) {
  const Interval dom = m.theta_domain;
  double lo = std::isfinite(dom.lo) ? dom.lo + 1e-8 * (1.0 + std::abs(dom.lo)) : -1.0;
  double hi = std::isfinite(dom.hi) ? dom.hi - 1e-8 * (1.0 + std::abs(dom.hi)) : 1.0;
  if (!(lo < hi)) throw DomainError("degenerate natural-family parameter domain");
  auto g = [&](double t) { return m.mean_map(t) - target; };
  for (int round = 0; round < 200; ++round) {
    if (g(lo) * g(hi) <= 0.0) return {lo, hi};
    bool grew = false;
    if (!std::isfinite(dom.lo)) {
      lo = lo < 0.0 ? lo * 2.0 : lo - 1.0;
      grew = true;
    } else if (lo > dom.lo + 1e-14) {
      lo = dom.lo + (lo - dom.lo) * 0.25;
      grew = true;
    }
    if (!std::isfinite(dom.hi)) {
      hi = hi > 0.0 ? hi * 2.0 : hi + 1.0;
      grew = true;
    } else if (hi < dom.hi - 1e-14) {
      hi = dom.hi - (dom.hi - hi) * 0.25;
      grew = true;
    }
    if (!grew) break;
  }
  throw DomainError("mean map never brackets the sample mean; MLE outside the parameter domain");
}

}  // namespace detail

inline double mle(const Model& model, const Dataset& data) {
  if (data.n == 0) throw DegenerateDataError("cannot fit an empty dataset");
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Poisson>) {
          if (data.mean <= 0.0) {
            throw DegenerateDataError("poisson MLE sits on the boundary: sample mean is 0");
          }
          return data.mean;
        } else if constexpr (std::is_same_v<T, NormalKnownVariance>) {
          return data.mean;
        } else {
          NeumaierSum ts;
          for (double x : data.values) ts.add(detail::natural_t(m, x));
          const double tbar = ts.value() / static_cast<double>(data.n);
          const RootBracket br = detail::bracket_mean_map(m, tbar);
          auto g = [&](double t) { return m.mean_map(t) - tbar; };
          return find_root(g, br, 1e-10);
        }
      },
      model);
}

// Mean and 1/n-variance of the sufficient statistic over a dataset (equal to
// the dataset moments whenever t is the identity).
inline std::pair<double, double> sufficient_moments(const Model& model, const Dataset& data) {
  if (const auto* nf = std::get_if<NaturalFamily>(&model); nf && nf->sufficient_stat) {
    NeumaierSum s;
    for (double x : data.values) s.add(nf->sufficient_stat(x));
    const double m = s.value() / static_cast<double>(data.n);
    NeumaierSum ss;
    for (double x : data.values) {
      const double c = nf->sufficient_stat(x) - m;
      ss.add(c * c);
    }
    return {m, ss.value() / static_cast<double>(data.n)};
  }
  return {data.mean, data.variance};
}

}  // namespace gbcal
