#pragma once

// Command-line surface: calibrate, posterior, reproduce. Machine-readable
// output is the only thing written to stdout; diagnostics go to stderr.
// Exit codes: 0 ok, 2 unreadable input / bad flags, 3 nonexistent prior
// moment, 4 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "gbcal/experiments.hpp"
#include "gbcal/fisher.hpp"
#include "gbcal/io.hpp"
#include "gbcal/kl.hpp"
#include "gbcal/models.hpp"
#include "gbcal/posterior.hpp"

namespace gbcal::cli {

inline RunConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SpecParseError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SpecParseError("config must be a JSON object");
  RunConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "command") c.command = value.get<std::string>();
    else if (key == "model") c.model = value.get<std::string>();
    else if (key == "prior") c.prior = value.get<std::string>();
    else if (key == "method") c.method = value.get<std::string>();
    else if (key == "data") c.data_path = value.get<std::string>();
    else if (key == "figure") c.figure = value.get<std::string>();
    else if (key == "scenario") c.scenario = value.get<std::string>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else if (key == "out") c.out_path = value.get<std::string>();
    else if (key == "w") c.w = value.get<double>();
    else if (key == "abs_tol") c.abs_tol = value.get<double>();
    else if (key == "rel_tol") c.rel_tol = value.get<double>();
    else if (key == "root_tol") c.root_tol = value.get<double>();
    else if (key == "n_grid") c.n_grid = value.get<std::vector<std::size_t>>();
    else throw SpecParseError("config: unknown key '" + key + "'");
  }
  return c;
}

inline RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return config_from_json(text);
}

namespace detail {

inline void emit(const RunConfig& cfg, const std::string& content, std::ostream& out) {
  if (cfg.out_path.empty()) {
    out << content;
  } else {
    write_text_file(cfg.out_path, content);
  }
}

inline QuadratureSpec quad_of(const RunConfig& cfg) {
  QuadratureSpec q;
  q.abs_tol = cfg.abs_tol;
  q.rel_tol = cfg.rel_tol;
  return q;
}

inline CalibrationResult calibrate(const RunConfig& cfg, const Model& model, const Prior& prior,
                                   const Dataset& data) {
  if (cfg.method == "fisher") {
    return fisher_w_hat(model, prior, data, quad_of(cfg));
  }
  if (cfg.method == "kl") {
    KlMatchProblem problem;
    problem.model = model;
    problem.prior = prior;
    problem.data = data;
    problem.tol = cfg.root_tol;
    problem.quad = quad_of(cfg);
    return kl_match_w(problem);
  }
  throw SpecParseError("unknown method '" + cfg.method + "' (expected fisher or kl)");
}

inline int cmd_calibrate(const RunConfig& cfg, std::ostream& out) {
  if (cfg.prior.empty()) throw SpecParseError("calibrate needs --prior");
  if (cfg.data_path.empty()) throw SpecParseError("calibrate needs --data");
  const Model model = parse_model_spec(cfg.model);
  const Prior prior = parse_prior_spec(cfg.prior);
  const Dataset data = Dataset::from_values(read_data_values(cfg.data_path));
  const CalibrationResult r = calibrate(cfg, model, prior, data);
  emit(cfg, calibration_to_json(r, data.n), out);
  return 0;
}

inline int cmd_posterior(const RunConfig& cfg, std::ostream& out) {
  if (cfg.prior.empty()) throw SpecParseError("posterior needs --prior");
  if (cfg.data_path.empty()) throw SpecParseError("posterior needs --data");
  const Model model = parse_model_spec(cfg.model);
  const Prior prior = parse_prior_spec(cfg.prior);
  const Dataset data = Dataset::from_values(read_data_values(cfg.data_path));
  double w;
  std::string method;
  if (cfg.w) {
    if (*cfg.w < 0.0) throw DomainError("posterior needs w >= 0");
    w = *cfg.w;
    method = "fixed";
  } else {
    const CalibrationResult r = calibrate(cfg, model, prior, data);
    w = r.w_hat;
    method = to_string(r.method);
  }
  const DensityGrid g = power_posterior_grid(model, prior, data, w);
  emit(cfg, density_grid_to_csv(g, w, method), out);
  return 0;
}

inline std::pair<std::string, std::string> split_extension(const std::string& path) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return {path, ""};
  }
  return {path.substr(0, dot), path.substr(dot)};
}

inline int cmd_reproduce(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.out_path.empty()) throw SpecParseError("reproduce needs --out");
  if (cfg.figure == "fig1") {
    const std::string prior_spec = cfg.prior.empty() ? "gamma:shape=3,rate=1" : cfg.prior;
    const Prior prior = parse_prior_spec(prior_spec);
    const std::vector<std::size_t>& grid = cfg.n_grid.empty() ? default_fig1_grid() : cfg.n_grid;
    Fig1Report rep = run_fig1(cfg.seed, grid, prior);
    rep.prior = prior_spec;
    write_text_file(cfg.out_path, fig1_to_csv(rep));
    err << "wrote " << cfg.out_path << " (seed " << cfg.seed << ", " << rep.points.size()
        << " rows)\n";
    (void)out;
    return 0;
  }
  if (cfg.figure == "fig2") {
    std::vector<Fig2Scenario> scenarios;
    const std::string sc = cfg.scenario.empty() ? "both" : cfg.scenario;
    if (sc == "both") {
      scenarios = {Fig2Scenario::overdispersed, Fig2Scenario::underdispersed};
    } else if (sc == "overdispersed") {
      scenarios = {Fig2Scenario::overdispersed};
    } else if (sc == "underdispersed") {
      scenarios = {Fig2Scenario::underdispersed};
    } else {
      throw SpecParseError("unknown scenario '" + sc + "'");
    }
    const auto [stem, ext] = split_extension(cfg.out_path);
    for (Fig2Scenario scenario : scenarios) {
      const Fig2Report rep = run_fig2(cfg.seed, scenario);
      std::string csv_path = cfg.out_path;
      std::string json_path = stem + ".json";
      if (scenarios.size() > 1) {
        csv_path = stem + "_" + to_string(scenario) + (ext.empty() ? ".csv" : ext);
        json_path = stem + "_" + to_string(scenario) + ".json";
      }
      write_text_file(csv_path, fig2_to_csv(rep));
      write_text_file(json_path, fig2_to_json(rep));
      err << "wrote " << csv_path << " and " << json_path << " (seed " << cfg.seed << ")\n";
    }
    return 0;
  }
  throw SpecParseError("unknown figure '" + cfg.figure + "' (expected fig1 or fig2)");
}

}  // namespace detail

// Parse args (without argv[0]) and run. Streams are injectable for tests.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;

  // Config file defaults load first; explicit flags override them.
  std::string preload;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      preload = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      preload = args[i].substr(9);
    }
  }
  if (!preload.empty()) {
    try {
      cfg = load_config_file(preload);
    } catch (const IoError& e) {
      err << "error: " << e.what() << "\n";
      return 2;
    } catch (const SpecParseError& e) {
      err << "error: " << e.what() << "\n";
      return 2;
    }
  }

  CLI::App app{"power-likelihood calibration for general Bayesian updates"};
  app.require_subcommand(0, 1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file naming the command to run");

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file with defaults for these flags");
    sub->add_option("--abs-tol", cfg.abs_tol, "quadrature absolute tolerance");
    sub->add_option("--rel-tol", cfg.rel_tol, "quadrature relative tolerance");
    sub->add_option("--root-tol", cfg.root_tol, "root-finding tolerance");
  };

  CLI::App* cal = app.add_subcommand("calibrate", "estimate the likelihood power w from data");
  cal->add_option("--model", cfg.model, "model spec, e.g. poisson or normal:var=1");
  cal->add_option("--prior", cfg.prior, "prior spec, e.g. gamma:shape=3,rate=1");
  cal->add_option("--method", cfg.method, "fisher or kl");
  cal->add_option("--data", cfg.data_path, "data file, one value per line");
  cal->add_option("--out", cfg.out_path, "output path (default: stdout)");
  add_common(cal);

  CLI::App* post = app.add_subcommand("posterior", "tabulate the power posterior density");
  post->add_option("--model", cfg.model, "model spec");
  post->add_option("--prior", cfg.prior, "prior spec");
  post->add_option("--data", cfg.data_path, "data file");
  post->add_option(
      "--w",
      [&cfg](const std::vector<std::string>& vals) {
        char* end = nullptr;
        const double v = std::strtod(vals.at(0).c_str(), &end);
        if (end != vals.at(0).c_str() + vals.at(0).size()) return false;
        cfg.w = v;
        return true;
      },
      "fixed power w (otherwise calibrated via --method)");
  post->add_option("--method", cfg.method, "calibrator when --w is not given");
  post->add_option("--out", cfg.out_path, "output path (default: stdout)");
  add_common(post);

  CLI::App* rep = app.add_subcommand("reproduce", "run a packaged experiment and write CSV");
  rep->add_option("--figure", cfg.figure, "fig1 or fig2");
  rep->add_option("--seed", cfg.seed, "experiment seed")->envname("GBCAL_SEED");
  rep->add_option("--out", cfg.out_path, "output CSV path");
  rep->add_option("--scenario", cfg.scenario, "fig2: overdispersed, underdispersed or both");
  rep->add_option("--n-grid", cfg.n_grid, "fig1: sample sizes")->delimiter(',');
  rep->add_option("--prior", cfg.prior, "fig1: prior spec override");
  add_common(rep);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (cal->parsed()) return detail::cmd_calibrate(cfg, out);
    if (post->parsed()) return detail::cmd_posterior(cfg, out);
    if (rep->parsed()) return detail::cmd_reproduce(cfg, out, err);
    // Config-file-driven invocation without a subcommand.
    if (cfg.command == "calibrate") return detail::cmd_calibrate(cfg, out);
    if (cfg.command == "posterior") return detail::cmd_posterior(cfg, out);
    if (cfg.command == "reproduce") return detail::cmd_reproduce(cfg, out, err);
    err << "error: no command given (calibrate | posterior | reproduce)\n";
    return 2;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const SpecParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const MomentError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace gbcal::cli
