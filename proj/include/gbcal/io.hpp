#pragma once

// File formats and spec strings: the `name:key=value,...` mini-grammar for
// models/priors, single-column data files, CSV/JSON emission for results and
// reports. Numbers are serialized with 17 significant digits so doubles
// round-trip losslessly; all emitted text uses LF line endings.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gbcal/errors.hpp"
#include "gbcal/experiments.hpp"
#include "gbcal/fisher.hpp"
#include "gbcal/models.hpp"
#include "gbcal/posterior.hpp"

namespace gbcal {

inline std::string format_g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string json_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += "\"";
  return out;
}

// ---------------------------------------------------------------------------
// Spec-string mini-grammar
// ---------------------------------------------------------------------------

namespace detail {

inline double parse_number(const std::string& s, const std::string& what) {
  if (s.empty()) throw SpecParseError(what + ": empty number");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) {
    throw SpecParseError(what + ": cannot parse number '" + s + "'");
  }
  return v;
}

// "name" or "name:k=v,k=v,..." -> (name, ordered key/value pairs).
inline std::pair<std::string, std::vector<std::pair<std::string, std::string>>> parse_spec_string(
    const std::string& spec) {
  const auto colon = spec.find(':');
  std::string name = spec.substr(0, colon);
  std::vector<std::pair<std::string, std::string>> kv;
  if (colon != std::string::npos) {
    std::string rest = spec.substr(colon + 1);
    std::stringstream ss(rest);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw SpecParseError("expected key=value in spec '" + spec + "'");
      }
      kv.emplace_back(item.substr(0, eq), item.substr(eq + 1));
    }
    if (rest.empty()) throw SpecParseError("dangling ':' in spec '" + spec + "'");
  }
  if (name.empty()) throw SpecParseError("empty spec string");
  return {name, kv};
}

inline std::map<std::string, std::string> keys_exactly(
    const std::vector<std::pair<std::string, std::string>>& kv,
    const std::vector<std::string>& required, const std::string& what) {
  std::map<std::string, std::string> m;
  for (const auto& [k, v] : kv) {
    bool known = false;
    for (const std::string& r : required) known = known || (k == r);
    if (!known) throw SpecParseError(what + ": unknown key '" + k + "'");
    if (m.count(k)) throw SpecParseError(what + ": duplicate key '" + k + "'");
    m[k] = v;
  }
  for (const std::string& r : required) {
    if (!m.count(r)) throw SpecParseError(what + ": missing key '" + r + "'");
  }
  return m;
}

}  // namespace detail

// "poisson" | "normal:var=V"
inline Model parse_model_spec(const std::string& spec) {
  const auto [name, kv] = detail::parse_spec_string(spec);
  if (name == "poisson") {
    detail::keys_exactly(kv, {}, "poisson model");
    return Poisson{};
  }
  if (name == "normal") {
    const auto m = detail::keys_exactly(kv, {"var"}, "normal model");
    const double v = detail::parse_number(m.at("var"), "normal model var");
    if (!(v > 0.0)) throw SpecParseError("normal model needs var > 0");
    return NormalKnownVariance{v};
  }
  throw SpecParseError("unknown model '" + name + "' (expected poisson or normal)");
}

inline std::string print_model_spec(const Model& model) {
  if (std::holds_alternative<Poisson>(model)) return "poisson";
  if (const auto* n = std::get_if<NormalKnownVariance>(&model)) {
    return "normal:var=" + format_g17(n->variance);
  }
  throw SpecParseError("natural-family models have no spec-string form");
}

// Reads a two-column CSV `theta,density` (header optional) into a tabulated prior.
inline TabulatedPrior read_tabulated_prior(const std::string& path);

// "gamma:shape=A,rate=B" | "normal:mean=M,precision=L" | "tabulated:path=FILE"
inline Prior parse_prior_spec(const std::string& spec) {
  const auto [name, kv] = detail::parse_spec_string(spec);
  if (name == "gamma") {
    const auto m = detail::keys_exactly(kv, {"shape", "rate"}, "gamma prior");
    const double shape = detail::parse_number(m.at("shape"), "gamma shape");
    const double rate = detail::parse_number(m.at("rate"), "gamma rate");
    if (!(shape > 0.0) || !(rate > 0.0)) throw SpecParseError("gamma prior needs shape,rate > 0");
    return GammaPrior{shape, rate};
  }
  if (name == "normal") {
    const auto m = detail::keys_exactly(kv, {"mean", "precision"}, "normal prior");
    const double mean = detail::parse_number(m.at("mean"), "normal mean");
    const double prec = detail::parse_number(m.at("precision"), "normal precision");
    if (!(prec > 0.0)) throw SpecParseError("normal prior needs precision > 0");
    return NormalPrior{mean, prec};
  }
  if (name == "tabulated") {
    const auto m = detail::keys_exactly(kv, {"path"}, "tabulated prior");
    return read_tabulated_prior(m.at("path"));
  }
  throw SpecParseError("unknown prior '" + name + "' (expected gamma, normal or tabulated)");
}

inline std::string print_prior_spec(const Prior& prior) {
  if (const auto* g = std::get_if<GammaPrior>(&prior)) {
    return "gamma:shape=" + format_g17(g->shape) + ",rate=" + format_g17(g->rate);
  }
  if (const auto* n = std::get_if<NormalPrior>(&prior)) {
    return "normal:mean=" + format_g17(n->mean) + ",precision=" + format_g17(n->precision);
  }
  const auto& t = std::get<TabulatedPrior>(prior);
  return "tabulated:points=" + std::to_string(t.grid.size());
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace detail

// One numeric value per line; a single leading header line `x` is allowed.
inline std::vector<double> read_data_values(const std::string& path) {
  std::vector<std::string> lines = detail::read_lines(path);
  std::vector<double> values;
  bool first = true;
  for (const std::string& line : lines) {
    if (line.empty()) continue;
    if (first && line == "x") {
      first = false;
      continue;
    }
    first = false;
    char* end = nullptr;
    const double v = std::strtod(line.c_str(), &end);
    if (end != line.c_str() + line.size()) {
      throw IoError("data file '" + path + "': cannot parse line '" + line + "'");
    }
    values.push_back(v);
  }
  if (values.empty()) throw IoError("data file '" + path + "' contains no values");
  return values;
}

inline TabulatedPrior read_tabulated_prior(const std::string& path) {
  std::vector<std::string> lines = detail::read_lines(path);
  std::vector<double> grid, vals;
  bool first = true;
  for (const std::string& line : lines) {
    if (line.empty()) continue;
    if (first && (line == "theta,density" || line == "theta,value")) {
      first = false;
      continue;
    }
    first = false;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw IoError("tabulated prior '" + path + "': expected theta,density per line");
    }
    grid.push_back(detail::parse_number(line.substr(0, comma), "tabulated theta"));
    vals.push_back(detail::parse_number(line.substr(comma + 1), "tabulated density"));
  }
  if (grid.size() < 2) throw IoError("tabulated prior '" + path + "' needs at least 2 rows");
  return TabulatedPrior::from_table(std::move(grid), std::move(vals));
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Result / report serialization
// ---------------------------------------------------------------------------

inline std::string calibration_to_json(const CalibrationResult& r, std::size_t n) {
  std::string s = "{";
  s += "\"w_hat\":" + format_g17(r.w_hat);
  s += ",\"numerator\":" + format_g17(r.numerator);
  s += ",\"denominator\":" + format_g17(r.denominator);
  s += ",\"method\":" + json_quote(to_string(r.method));
  s += ",\"n\":" + std::to_string(n);
  s += ",\"diagnostics\":{";
  bool first = true;
  for (const auto& [k, v] : r.diagnostics) {
    if (!first) s += ",";
    first = false;
    s += json_quote(k) + ":" + format_g17(v);
  }
  s += "}}\n";
  return s;
}

// `theta,density` with one comment line recording w and the method.
inline std::string density_grid_to_csv(const DensityGrid& g, double w, const std::string& method) {
  std::string s = "# w=" + format_g17(w) + " method=" + method + "\n";
  s += "theta,density\n";
  for (std::size_t i = 0; i < g.theta.size(); ++i) {
    s += format_g17(g.theta[i]) + "," + format_g17(g.density[i]) + "\n";
  }
  return s;
}

inline std::string fig1_to_csv(const Fig1Report& r) {
  std::string s = "n,w_hat\n";
  for (const Fig1Point& p : r.points) {
    s += std::to_string(p.n) + "," + format_g17(p.w_hat) + "\n";
  }
  return s;
}

inline std::string fig2_to_csv(const Fig2Report& r) {
  std::string s = "theta,fisher_posterior,kl_posterior,correct_posterior\n";
  for (std::size_t i = 0; i < r.fisher_posterior.theta.size(); ++i) {
    s += format_g17(r.fisher_posterior.theta[i]) + "," + format_g17(r.fisher_posterior.density[i]) +
         "," + format_g17(r.kl_posterior.density[i]) + "," +
         format_g17(r.correct_posterior.density[i]) + "\n";
  }
  return s;
}

inline std::string fig2_to_json(const Fig2Report& r) {
  std::string s = "{";
  s += "\"scenario\":" + json_quote(to_string(r.scenario));
  s += ",\"seed\":" + std::to_string(r.seed);
  s += ",\"n\":" + std::to_string(r.n);
  s += ",\"data_precision\":" + format_g17(r.data_precision);
  s += ",\"model_variance\":" + format_g17(r.model_variance);
  s += ",\"prior_precision\":" + format_g17(r.prior_precision);
  s += ",\"w_fisher\":" + format_g17(r.w_fisher);
  s += ",\"w_kl\":" + format_g17(r.w_kl);
  s += ",\"fisher_posterior_mean\":" + format_g17(r.fisher_params.mean);
  s += ",\"fisher_posterior_precision\":" + format_g17(r.fisher_params.precision);
  s += ",\"kl_posterior_mean\":" + format_g17(r.kl_params.mean);
  s += ",\"kl_posterior_precision\":" + format_g17(r.kl_params.precision);
  s += ",\"correct_posterior_mean\":" + format_g17(r.correct_params.mean);
  s += ",\"correct_posterior_precision\":" + format_g17(r.correct_params.precision);
  s += ",\"dist_fisher_to_correct\":" + format_g17(r.dist_fisher);
  s += ",\"dist_kl_to_correct\":" + format_g17(r.dist_kl);
  s += ",\"rng\":" + json_quote(r.rng);
  s += "}\n";
  return s;
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct RunConfig {
  std::string command;  // calibrate | posterior | reproduce
  std::string model = "poisson";
  std::string prior;
  std::string method = "fisher";  // fisher | kl
  std::string data_path;
  std::string figure;    // fig1 | fig2
  std::string scenario;  // both | overdispersed | underdispersed
  std::uint64_t seed = 1;
  std::string out_path;
  std::optional<double> w;
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  double root_tol = 1e-10;
  std::vector<std::size_t> n_grid;

  bool operator==(const RunConfig&) const = default;
};

inline std::string config_to_json(const RunConfig& c) {
  std::string s = "{";
  s += "\"command\":" + json_quote(c.command);
  s += ",\"model\":" + json_quote(c.model);
  s += ",\"prior\":" + json_quote(c.prior);
  s += ",\"method\":" + json_quote(c.method);
  s += ",\"data\":" + json_quote(c.data_path);
  s += ",\"figure\":" + json_quote(c.figure);
  s += ",\"scenario\":" + json_quote(c.scenario);
  s += ",\"seed\":" + std::to_string(c.seed);
  s += ",\"out\":" + json_quote(c.out_path);
  if (c.w) s += ",\"w\":" + format_g17(*c.w);
  s += ",\"abs_tol\":" + format_g17(c.abs_tol);
  s += ",\"rel_tol\":" + format_g17(c.rel_tol);
  s += ",\"root_tol\":" + format_g17(c.root_tol);
  if (!c.n_grid.empty()) {
    s += ",\"n_grid\":[";
    for (std::size_t i = 0; i < c.n_grid.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(c.n_grid[i]);
    }
    s += "]";
  }
  s += "}\n";
  return s;
}

}  // namespace gbcal
