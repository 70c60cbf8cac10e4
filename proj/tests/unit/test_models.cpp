#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "gbcal/models.hpp"
#include "gbcal/numerics.hpp"

using namespace gbcal;

namespace {

// Natural-parameter Poisson: b(theta)=e^theta, t(x)=x, c(x)=1/x!.
NaturalFamily natural_poisson() {
  NaturalFamily m;
  m.log_normalizer = [](double t) { return std::exp(t); };
  m.mean_map = [](double t) { return std::exp(t); };
  m.variance_map = [](double t) { return std::exp(t); };
  m.log_base = [](double x) { return -std::lgamma(x + 1.0); };
  m.theta_domain = {-kInf, kInf};
  m.x_domain = {-0.5, kInf};
  m.discrete_support = true;
  return m;
}

}  // namespace

TEST_CASE("score closed forms") {
  CHECK(score(Poisson{}, 0.0, 2.0) == -1.0);
  CHECK(score(Poisson{}, 3.0, 3.0) == 0.0);
  CHECK(score(NormalKnownVariance{1.0}, 1.5, 0.5) == 1.0);
}

TEST_CASE("score equals the finite difference of log density") {
  const double h = 1e-5;
  const std::vector<Model> models = {Poisson{}, NormalKnownVariance{2.5}, natural_poisson()};
  for (const Model& model : models) {
    for (double x : {0.0, 1.0, 3.0, 7.0}) {
      for (double theta : {0.5, 1.0, 2.7}) {
        const double t = std::holds_alternative<NaturalFamily>(model) ? std::log(theta) : theta;
        const double fd =
            (log_density(model, x, t + h) - log_density(model, x, t - h)) / (2.0 * h);
        CHECK(std::abs(score(model, x, t) - fd) < 1e-6);
      }
    }
  }
}

TEST_CASE("score rejects parameters outside the domain") {
  CHECK_THROWS_AS(score(Poisson{}, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(score(Poisson{}, 1.0, -2.0), DomainError);
  CHECK_THROWS_AS(score(Poisson{}, -1.0, 2.0), DomainError);
}

TEST_CASE("poisson pmf sums to one") {
  for (double theta : {0.4, 2.0, 9.5}) {
    NeumaierSum mass;
    long x = 0;
    while (mass.value() < 1.0 - 1e-12 && x < 2000) {
      mass.add(density(Poisson{}, static_cast<double>(x), theta));
      ++x;
    }
    CHECK(std::abs(mass.value() - 1.0) < 1e-10);
  }
}

TEST_CASE("normal density integrates to one") {
  const Model m = NormalKnownVariance{3.0};
  auto f = [&](double x) { return density(m, x, 1.7); };
  CHECK(std::abs(integrate_real_line(f, 1.7, std::sqrt(3.0)).value - 1.0) < 1e-8);
}

TEST_CASE("natural family variance map is positive and consistent with the mean map") {
  const NaturalFamily m = natural_poisson();
  for (double t : {-1.0, 0.0, 0.5, 1.5}) {
    CHECK(m.variance_map(t) > 0.0);
    const double fd = central_difference(m.mean_map, t, 1e-5);
    CHECK(std::abs(fd - m.variance_map(t)) < 1e-4 * std::max(1.0, m.variance_map(t)));
  }
}

TEST_CASE("mle closed forms and degenerate data") {
  CHECK(mle(Poisson{}, Dataset::from_values({2, 4, 3})) == 3.0);
  CHECK(mle(NormalKnownVariance{1.0}, Dataset::from_values({-1, 1})) == 0.0);
  CHECK_THROWS_AS(mle(Poisson{}, Dataset::from_values({0, 0, 0})), DegenerateDataError);
}

TEST_CASE("natural family mle solves b'(theta) = mean of t") {
  const Model m = natural_poisson();
  const Dataset d = Dataset::from_values({2, 3, 4});  // \bar t = 3
  const double theta_hat = mle(m, d);
  CHECK(std::abs(theta_hat - std::log(3.0)) < 1e-9);
  CHECK(std::abs(std::exp(theta_hat) - 3.0) < 1e-9);
}

TEST_CASE("mle is a stationary point of the log likelihood") {
  const Dataset d = Dataset::from_values({1, 5, 2, 0, 4, 3, 3, 2, 6, 1});
  for (const Model& model : {Model{Poisson{}}, Model{NormalKnownVariance{1.5}}}) {
    const double theta_hat = mle(model, d);
    NeumaierSum s;
    for (double x : d.values) s.add(score(model, x, theta_hat));
    CHECK(std::abs(s.value()) <= 1e-8 * static_cast<double>(d.n));
  }
}

TEST_CASE("dataset caches match recomputation and use the 1/n convention") {
  const std::vector<double> values = {0.1, 2.7, -1.3, 5.5, 0.0, 3.2};
  const Dataset d = Dataset::from_values(values);
  double mean = 0.0;
  for (double x : values) mean += x;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double x : values) var += (x - mean) * (x - mean);
  var /= static_cast<double>(values.size());
  CHECK(std::abs(d.mean - mean) <= 1e-12 * std::max(1.0, std::abs(mean)));
  CHECK(std::abs(d.variance - var) <= 1e-12 * std::max(1.0, var));

  const Dataset two = Dataset::from_values({1.0, 3.0});
  CHECK(two.mean == 2.0);
  CHECK(two.variance == 1.0);  // 1/n, not 1/(n-1)

  CHECK_THROWS_AS(Dataset::from_values({}), DegenerateDataError);
}

TEST_CASE("gamma inverse moments match the quadrature oracle") {
  const Prior g31 = GammaPrior{3.0, 1.0};
  const InverseMoments m1 = prior_inverse_moments(g31);
  CHECK(m1.a == Catch::Approx(0.5).epsilon(1e-12));
  CHECK(m1.b == Catch::Approx(0.5).epsilon(1e-12));

  const Prior g42 = GammaPrior{4.0, 2.0};
  const InverseMoments m2 = prior_inverse_moments(g42);
  CHECK(m2.a == Catch::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(m2.b == Catch::Approx(2.0 / 3.0).epsilon(1e-12));

  for (const Prior& p : {g31, g42}) {
    const InverseMoments m = prior_inverse_moments(p);
    const double qa = prior_expectation(p, [](double t) { return 1.0 / (t * t); });
    const double qb = prior_expectation(p, [](double t) { return 1.0 / t; });
    CHECK(std::abs(qa - m.a) < 1e-6 * m.a);
    CHECK(std::abs(qb - m.b) < 1e-6 * m.b);
  }
}

TEST_CASE("inverse moments that do not exist are errors, not numbers") {
  CHECK_THROWS_AS(prior_inverse_moments(Prior{GammaPrior{2.0, 1.0}}), MomentError);
  CHECK_THROWS_AS(prior_inverse_moments(Prior{GammaPrior{1.0, 1.0}}), MomentError);
  CHECK_THROWS_AS(prior_inverse_moments(Prior{NormalPrior{0.0, 1.0}}), MomentError);
}

TEST_CASE("tabulated prior normalizes and answers moment queries") {
  // Triangle on [1, 3].
  std::vector<double> grid, vals;
  for (int i = 0; i <= 400; ++i) {
    const double t = 1.0 + 2.0 * i / 400.0;
    grid.push_back(t);
    vals.push_back(t <= 2.0 ? (t - 1.0) : (3.0 - t));
  }
  const TabulatedPrior tab = TabulatedPrior::from_table(grid, vals);
  CHECK(std::abs(trapezoid(tab.grid, tab.values) - 1.0) < 1e-6);

  const Prior p = tab;
  CHECK(std::abs(prior_mean(p) - 2.0) < 1e-4);
  const InverseMoments im = prior_inverse_moments(p);
  // Oracle: dense trapezoid against the same interpolated density.
  std::vector<double> gx, g1, g2;
  for (int i = 0; i <= 20000; ++i) {
    const double t = 1.0 + 2.0 * i / 20000.0;
    gx.push_back(t);
    g1.push_back(tab.density(t) / t);
    g2.push_back(tab.density(t) / (t * t));
  }
  CHECK(std::abs(im.b - trapezoid(gx, g1)) < 1e-6 * im.b);
  CHECK(std::abs(im.a - trapezoid(gx, g2)) < 1e-6 * im.a);
}

TEST_CASE("normal prior moments") {
  const Prior p = NormalPrior{0.0, 0.01};
  CHECK(prior_mean(p) == 0.0);
  CHECK(prior_second_moment(p) == Catch::Approx(100.0));
  const double q = prior_expectation(p, [](double t) { return t * t; });
  CHECK(std::abs(q - 100.0) < 1e-4);
}
