#pragma once

// Seeded data generators and the two reproduction pipelines: the w-hat
// trajectory on overdispersed counts and the three-posterior normal
// comparison. Reports are fully determined by (config, seed).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "gbcal/errors.hpp"
#include "gbcal/fisher.hpp"
#include "gbcal/kl.hpp"
#include "gbcal/models.hpp"
#include "gbcal/posterior.hpp"
#include "gbcal/rng.hpp"

namespace gbcal {

// x | phi ~ Poisson(phi), phi ~ Gamma with the given mean/variance.
// Marginal mean is mix_mean; marginal variance is mix_mean + mix_var.
struct PoissonGammaMixture {
  double mix_mean = 3.33;
  double mix_var = 11.11;
};

struct NormalFixed {
  double mean = 0.0;
  double precision = 1.0;
};

struct PoissonExact {
  double theta = 1.0;
};

using GeneratorKind = std::variant<PoissonGammaMixture, NormalFixed, PoissonExact>;

struct GeneratorSpec {
  GeneratorKind kind;
  std::uint64_t seed = 0;
};

inline std::string generator_echo(const GeneratorKind& kind) {
  if (const auto* m = std::get_if<PoissonGammaMixture>(&kind)) {
    return "poisson-gamma-mixture(mean=" + std::to_string(m->mix_mean) +
           ",var=" + std::to_string(m->mix_var) + ")";
  }
  if (const auto* nf = std::get_if<NormalFixed>(&kind)) {
    return "normal(mean=" + std::to_string(nf->mean) +
           ",precision=" + std::to_string(nf->precision) + ")";
  }
  const auto& p = std::get<PoissonExact>(kind);
  return "poisson(theta=" + std::to_string(p.theta) + ")";
}

// Draws are sequential per observation, so shorter runs are prefixes of
// longer ones under the same seed.
inline Dataset generate(const GeneratorSpec& spec, std::size_t n) {
  if (n < 1) throw DomainError("generator needs n >= 1");
  SplitMix64 rng(spec.seed);
  std::vector<double> values;
  values.reserve(n);
  if (const auto* mix = std::get_if<PoissonGammaMixture>(&spec.kind)) {
    if (!(mix->mix_mean > 0.0) || !(mix->mix_var > 0.0)) {
      throw DomainError("mixture needs positive mean and variance");
    }
    const double shape = mix->mix_mean * mix->mix_mean / mix->mix_var;
    const double rate = mix->mix_mean / mix->mix_var;
    for (std::size_t i = 0; i < n; ++i) {
      const double phi = sample_gamma(rng, shape, rate);
      values.push_back(static_cast<double>(sample_poisson(rng, phi)));
    }
  } else if (const auto* nf = std::get_if<NormalFixed>(&spec.kind)) {
    if (!(nf->precision > 0.0)) throw DomainError("normal generator needs precision > 0");
    const double sd = 1.0 / std::sqrt(nf->precision);
    for (std::size_t i = 0; i < n; ++i) {
      values.push_back(sample_normal(rng, nf->mean, sd));
    }
  } else {
    const auto& p = std::get<PoissonExact>(spec.kind);
    if (!(p.theta > 0.0)) throw DomainError("poisson generator needs theta > 0");
    for (std::size_t i = 0; i < n; ++i) {
      values.push_back(static_cast<double>(sample_poisson(rng, p.theta)));
    }
  }
  return Dataset::from_values(std::move(values));
}

inline double sample_prior(const Prior& prior, SplitMix64& rng) {
  if (const auto* g = std::get_if<GammaPrior>(&prior)) {
    return sample_gamma(rng, g->shape, g->rate);
  }
  if (const auto* n = std::get_if<NormalPrior>(&prior)) {
    return sample_normal(rng, n->mean, 1.0 / std::sqrt(n->precision));
  }
  // Tabulated: inverse CDF through the piecewise-linear density.
  const auto& t = std::get<TabulatedPrior>(prior);
  const double u = rng.uniform_open();
  double cum = 0.0;
  for (std::size_t i = 0; i + 1 < t.grid.size(); ++i) {
    const double seg = 0.5 * (t.grid[i + 1] - t.grid[i]) * (t.values[i] + t.values[i + 1]);
    if (cum + seg >= u || i + 2 == t.grid.size()) {
      const double frac = seg > 0.0 ? std::clamp((u - cum) / seg, 0.0, 1.0) : 0.5;
      return t.grid[i] + frac * (t.grid[i + 1] - t.grid[i]);
    }
    cum += seg;
  }
  return t.grid.back();
}

// ---------------------------------------------------------------------------
// w-hat against sample size on overdispersed counts
// ---------------------------------------------------------------------------

struct Fig1Point {
  std::size_t n = 0;
  double w_hat = 0.0;
};

struct Fig1Report {
  std::uint64_t seed = 0;
  std::vector<Fig1Point> points;
  std::string generator;
  std::string prior;
  std::string rng = kRngStamp;
};

inline const std::vector<std::size_t>& default_fig1_grid() {
  static const std::vector<std::size_t> grid = {10, 20, 50, 100, 200, 400, 700, 1000};
  return grid;
}

// One trajectory: nested prefixes of a single mixture stream, calibrated with
// the Poisson closed form at each size.
inline Fig1Report run_fig1(std::uint64_t seed, const std::vector<std::size_t>& n_grid,
                           const Prior& prior,
                           const PoissonGammaMixture& mixture = PoissonGammaMixture{}) {
  if (n_grid.empty()) throw DomainError("fig1 needs a non-empty n grid");
  for (std::size_t i = 0; i + 1 < n_grid.size(); ++i) {
    if (!(n_grid[i] < n_grid[i + 1])) {
      throw DomainError("fig1 n grid must be strictly increasing");
    }
  }
  const Dataset full = generate({mixture, seed}, n_grid.back());
  Fig1Report report;
  report.seed = seed;
  report.generator = generator_echo(GeneratorKind{mixture});
  const Model model = Poisson{};
  for (std::size_t n : n_grid) {
    const Dataset prefix = Dataset::from_values(
        std::vector<double>(full.values.begin(), full.values.begin() + static_cast<long>(n)));
    report.points.push_back({n, fisher_w_hat(model, prior, prefix).w_hat});
  }
  return report;
}

// ---------------------------------------------------------------------------
// Normal example: Fisher-w vs KL-w vs correct-model posterior
// ---------------------------------------------------------------------------

enum class Fig2Scenario { overdispersed, underdispersed };

inline const char* to_string(Fig2Scenario s) {
  return s == Fig2Scenario::overdispersed ? "overdispersed" : "underdispersed";
}

struct Fig2Report {
  std::uint64_t seed = 0;
  Fig2Scenario scenario = Fig2Scenario::overdispersed;
  std::size_t n = 50;
  double data_precision = 0.2;
  double model_variance = 1.0;
  double prior_precision = 0.01;
  double w_fisher = 1.0;
  double w_kl = 1.0;
  NormalParams fisher_params, kl_params, correct_params;
  DensityGrid fisher_posterior, kl_posterior, correct_posterior;  // shared theta grid
  double dist_fisher = 0.0;
  double dist_kl = 0.0;
  std::string rng = kRngStamp;
};

// 50 draws from a normal with the scenario precision, model variance 1, prior
// N(0, precision 0.01). Produces the two calibrated posteriors (calibrated w
// applied to the full n-observation likelihood) plus the correct-model
// posterior, all tabulated on one grid, with L1 distances to the correct one.
inline Fig2Report run_fig2(std::uint64_t seed, Fig2Scenario scenario,
                           std::size_t grid_points = 2001) {
  Fig2Report rep;
  rep.seed = seed;
  rep.scenario = scenario;
  rep.data_precision = scenario == Fig2Scenario::overdispersed ? 0.2 : 4.0;

  const Dataset data = generate({NormalFixed{0.0, rep.data_precision}, seed}, rep.n);
  const Model model = NormalKnownVariance{rep.model_variance};
  const Prior prior = NormalPrior{0.0, rep.prior_precision};

  rep.w_fisher = fisher_w_hat(model, prior, data).w_hat;
  KlMatchProblem problem;
  problem.model = model;
  problem.prior = prior;
  problem.data = data;
  rep.w_kl = kl_match_w(problem).w_hat;

  rep.fisher_params = std::get<NormalParams>(power_posterior_conjugate(model, prior, data, rep.w_fisher));
  rep.kl_params = std::get<NormalParams>(power_posterior_conjugate(model, prior, data, rep.w_kl));
  const Model correct_model = NormalKnownVariance{1.0 / rep.data_precision};
  rep.correct_params = std::get<NormalParams>(power_posterior_conjugate(correct_model, prior, data, 1.0));

  // Shared grid covering all three posteriors.
  double lo = kInf, hi = -kInf;
  for (const NormalParams& p : {rep.fisher_params, rep.kl_params, rep.correct_params}) {
    const double sd = 1.0 / std::sqrt(p.precision);
    lo = std::min(lo, p.mean - 8.0 * sd);
    hi = std::max(hi, p.mean + 8.0 * sd);
  }
  GridSpec gspec;
  gspec.points = grid_points;
  gspec.lo = lo;
  gspec.hi = hi;
  rep.fisher_posterior = power_posterior_grid(model, prior, data, rep.w_fisher, gspec);
  rep.kl_posterior = power_posterior_grid(model, prior, data, rep.w_kl, gspec);
  rep.correct_posterior = power_posterior_grid(correct_model, prior, data, 1.0, gspec);

  rep.dist_fisher = density_distance(rep.fisher_posterior, rep.correct_posterior);
  rep.dist_kl = density_distance(rep.kl_posterior, rep.correct_posterior);
  return rep;
}

}  // namespace gbcal
