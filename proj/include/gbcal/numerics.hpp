#pragma once

// Shared numerical kernels: adaptive 1-D quadrature (Gauss-Kronrod 15/7),
// bracketed scalar root finding (Brent), central differences, compensated
// summation. Tolerances are explicit everywhere; defaults sit two orders of
// magnitude below the tightest checks built on top of them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "gbcal/errors.hpp"

namespace gbcal {

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double x) const { return x > lo && x < hi; }
  bool is_finite() const { return std::isfinite(lo) && std::isfinite(hi); }
};

// Neumaier variant of Kahan summation. Order-stable reductions for the
// n^-1 * sum terms in the calibrators.
class NeumaierSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

template <class It>
double compensated_sum(It first, It last) {
  NeumaierSum s;
  for (; first != last; ++first) s.add(static_cast<double>(*first));
  return s.value();
}

struct QuadratureSpec {
  enum class Scheme { adaptive, fixed_gauss };
  Scheme scheme = Scheme::adaptive;
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  int max_subdivisions = 512;
};

struct IntegralEstimate {
  double value = 0.0;
  double error_bound = 0.0;
};

struct RootBracket {
  double lo = 0.0;
  double hi = 0.0;
};

namespace detail {

// Gauss-Kronrod 15-point nodes/weights on [-1,1] (positive half; symmetric).
// The embedded 7-point Gauss rule uses the odd-indexed nodes.
inline constexpr double kGk15Nodes[8] = {
    0.0,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
};
inline constexpr double kGk15Weights[8] = {
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
};
inline constexpr double kGauss7Weights[4] = {
    0.417959183673469387755102040816327,  // node 0.0
    0.381830050505118944950369775488975,  // node 0.405845...
    0.279705391489276667901467771423780,  // node 0.741531...
    0.129484966168869693270611432679082,  // node 0.949107...
};

struct Segment {
  double a, b;
  double value;
  double error;
};

// One K15 panel. Node evaluations stay strictly inside (a,b), so integrable
// endpoint behaviour (transformed infinite limits) needs no special casing.
template <class F>
Segment gk15_panel(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double fv[15];
  // fv index: 7 is the centre; 7 +/- k are the +/- nodes.
  for (int k = 0; k < 8; ++k) {
    const double dx = h * kGk15Nodes[k];
    const double xp = c + dx;
    const double xm = c - dx;
    const double fp = f(xp);
    if (!std::isfinite(fp)) {
      throw EvaluationError("integrand returned a non-finite value at x=" + std::to_string(xp));
    }
    fv[7 + k] = fp;
    if (k > 0) {
      const double fm = f(xm);
      if (!std::isfinite(fm)) {
        throw EvaluationError("integrand returned a non-finite value at x=" + std::to_string(xm));
      }
      fv[7 - k] = fm;
    }
  }
  double kron = kGk15Weights[0] * fv[7];
  for (int k = 1; k < 8; ++k) {
    kron += kGk15Weights[k] * (fv[7 + k] + fv[7 - k]);
  }
  double gauss = kGauss7Weights[0] * fv[7];
  for (int k = 1; k < 4; ++k) {
    gauss += kGauss7Weights[k] * (fv[7 + 2 * k] + fv[7 - 2 * k]);
  }
  Segment s;
  s.a = a;
  s.b = b;
  s.value = kron * h;
  s.error = std::abs((kron - gauss) * h);
  return s;
}

template <class F>
IntegralEstimate integrate_finite(F& f, double lo, double hi, const QuadratureSpec& spec) {
  if (!(spec.abs_tol > 0.0) || !(spec.rel_tol > 0.0) || spec.max_subdivisions < 1) {
    throw DomainError("quadrature spec needs positive tolerances and max_subdivisions >= 1");
  }
  if (!(lo < hi)) {
    if (lo == hi) return {0.0, 0.0};
    throw DomainError("integration interval has lo >= hi");
  }
  if (spec.scheme == QuadratureSpec::Scheme::fixed_gauss) {
    // Composite fixed-node rule: equal panels, no adaptation.
    const int n = std::max(1, spec.max_subdivisions);
    NeumaierSum val;
    double err = 0.0;
    const double step = (hi - lo) / n;
    for (int i = 0; i < n; ++i) {
      Segment s = gk15_panel(f, lo + i * step, lo + (i + 1) * step);
      val.add(s.value);
      err += s.error;
    }
    const double v = val.value();
    if (err > std::max(spec.abs_tol, spec.rel_tol * std::abs(v))) {
      throw ConvergenceError("fixed-node quadrature did not reach tolerance", v, err);
    }
    return {v, err};
  }

  std::vector<Segment> segs;
  segs.push_back(gk15_panel(f, lo, hi));
  int splits = 0;
  for (;;) {
    NeumaierSum val;
    double err = 0.0;
    for (const Segment& s : segs) {
      val.add(s.value);
      err += s.error;
    }
    const double v = val.value();
    if (err <= std::max(spec.abs_tol, spec.rel_tol * std::abs(v))) {
      return {v, err};
    }
    if (splits >= spec.max_subdivisions) {
      throw ConvergenceError("quadrature subdivision budget exhausted", v, err);
    }
    std::size_t worst = 0;
    for (std::size_t i = 1; i < segs.size(); ++i) {
      if (segs[i].error > segs[worst].error) worst = i;
    }
    const Segment w = segs[worst];
    const double mid = 0.5 * (w.a + w.b);
    segs[worst] = gk15_panel(f, w.a, mid);
    segs.push_back(gk15_panel(f, mid, w.b));
    ++splits;
  }
}

}  // namespace detail

// Integrate f over [lo, hi]; either endpoint may be infinite. Semi-infinite
// ranges use the rational map t = u/(1-u); the doubly infinite case routes
// through integrate_real_line with unit scale (pass an explicit centre/scale
// there when the integrand lives far from 0 or at a very different width).
template <class F>
IntegralEstimate integrate_real_line(F&& f, double center, double scale, const QuadratureSpec& spec = {});

template <class F>
IntegralEstimate integrate(F&& f, double lo, double hi, const QuadratureSpec& spec = {}) {
  const bool lo_inf = std::isinf(lo);
  const bool hi_inf = std::isinf(hi);
  if (!lo_inf && !hi_inf) {
    return detail::integrate_finite(f, lo, hi, spec);
  }
  if (lo_inf && hi_inf) {
    return integrate_real_line(f, 0.0, 1.0, spec);
  }
  if (!lo_inf && hi_inf) {
    auto g = [&f, lo](double u) {
      const double om = 1.0 - u;
      const double t = lo + u / om;
      if (!std::isfinite(t)) return 0.0;
      const double fv = f(t);
      if (fv == 0.0) return 0.0;
      return fv / (om * om);
    };
    return detail::integrate_finite(g, 0.0, 1.0, spec);
  }
  // (-inf, hi]: mirror of the case above.
  auto g = [&f, hi](double u) {
    const double om = 1.0 - u;
    const double t = hi - u / om;
    if (!std::isfinite(t)) return 0.0;
    const double fv = f(t);
    if (fv == 0.0) return 0.0;
    return fv / (om * om);
  };
  return detail::integrate_finite(g, 0.0, 1.0, spec);
}

// tanh-type map for integrals over the whole real line: x = center + scale*atanh(u).
// Reaches |x - center| ~ 18*scale before u hits the representable edge, so the
// scale should be of the order of the integrand's width.
template <class F>
IntegralEstimate integrate_real_line(F&& f, double center, double scale, const QuadratureSpec& spec) {
  if (!(scale > 0.0) || !std::isfinite(scale) || !std::isfinite(center)) {
    throw DomainError("integrate_real_line needs a finite center and positive scale");
  }
  auto g = [&f, center, scale](double u) {
    const double om = (1.0 - u) * (1.0 + u);
    const double x = center + scale * std::atanh(u);
    if (!std::isfinite(x)) return 0.0;
    const double fv = f(x);
    if (fv == 0.0) return 0.0;
    return fv * scale / om;
  };
  return detail::integrate_finite(g, -1.0, 1.0, spec);
}

// Brent's method. Requires a sign change on the bracket; converges to
// |f(x)| <= tol or bracket width <= tol, whichever comes first.
template <class F>
double find_root(F&& f, RootBracket bracket, double tol = 1e-10) {
  double a = bracket.lo;
  double b = bracket.hi;
  if (!(a < b)) throw DomainError("root bracket must have lo < hi");
  double fa = f(a);
  double fb = f(b);
  if (std::isnan(fa) || std::isnan(fb)) {
    throw EvaluationError("root target returned NaN at a bracket endpoint");
  }
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (fa * fb > 0.0) {
    throw BracketError("no sign change on root bracket [" + std::to_string(a) + ", " +
                           std::to_string(b) + "]",
                       fa, fb);
  }
  double c = a, fc = fa;
  double d = b - a, e = d;
  for (int iter = 0; iter < 200; ++iter) {
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double m = 0.5 * (c - b);
    if (std::abs(fb) <= tol || std::abs(m) <= 0.5 * tol ||
        std::abs(m) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(b)) {
      return b;
    }
    if (std::abs(e) < 0.5 * tol || std::abs(fa) <= std::abs(fb)) {
      d = m;
      e = m;
    } else {
      double p, q;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * m * s;
        q = 1.0 - s;
      } else {
        const double qq = fa / fc;
        const double r = fb / fc;
        p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) {
        q = -q;
      } else {
        p = -p;
      }
      if (2.0 * p < std::min(3.0 * m * q - std::abs(0.25 * tol * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = m;
        e = m;
      }
    }
    a = b;
    fa = fb;
    b += (std::abs(d) > 0.25 * tol) ? d : (m > 0.0 ? 0.25 * tol : -0.25 * tol);
    fb = f(b);
    if (std::isnan(fb)) throw EvaluationError("root target returned NaN during iteration");
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = b - a;
      e = d;
    }
  }
  throw ConvergenceError("root finder exceeded its iteration budget", b, std::abs(fb));
}

template <class F>
double central_difference(F&& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Trapezoid rule on a tabulated function (grid strictly increasing).
inline double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw DomainError("trapezoid needs two same-length arrays with >= 2 points");
  }
  NeumaierSum s;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    s.add(0.5 * (x[i + 1] - x[i]) * (y[i] + y[i + 1]));
  }
  return s.value();
}

}  // namespace gbcal
