// covising command line: simulate | fit | path | roc | stability | hubs | assumptions
//
// Every command echoes its resolved configuration to <out>/config_used.json;
// rerunning with --config <that file> reproduces the outputs byte for byte.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "covising/cli.hpp"
#include "covising/errors.hpp"
#include "covising/io.hpp"

namespace {

using covising::cli::kExitDegenerate;
using covising::cli::kExitDimension;
using covising::cli::kExitIo;
using covising::cli::kExitParse;
using covising::cli::kExitUsage;
using nlohmann::json;

// --config is applied before CLI11 parses argv, so explicit flags win.
json load_config(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--config")
      return json::parse(covising::io::read_text(argv[i + 1]));
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a.rfind("--config=", 0) == 0)
      return json::parse(covising::io::read_text(a.substr(9)));
  }
  return json::object();
}

template <typename T>
void from_config(const json& cfg, const char* key, T& value) {
  if (cfg.contains(key)) value = cfg[key].get<T>();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse covariate-dependent Ising models: simulation, penalized "
               "pseudo-likelihood fitting, support-recovery evaluation"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; explicit flags override it")
      ->expected(1);

  json cfg;
  try {
    cfg = load_config(argc, argv);
  } catch (const json::parse_error& e) {
    std::cerr << "config: " << e.what() << "\n";
    return kExitParse;
  } catch (const covising::IoError& e) {
    std::cerr << e.what() << "\n";
    return kExitIo;
  }

  covising::cli::SimulateArgs sim;
  from_config(cfg, "q", sim.q);
  from_config(cfg, "p", sim.p);
  from_config(cfg, "n", sim.n);
  from_config(cfg, "n-edges", sim.n_edges);
  from_config(cfg, "rho", sim.rho);
  from_config(cfg, "beta", sim.beta);
  from_config(cfg, "sweeps", sim.sweeps);
  from_config(cfg, "seed", sim.seed);
  from_config(cfg, "threads", sim.threads);
  from_config(cfg, "out", sim.out);
  auto* c_sim = app.add_subcommand("simulate", "generate a dataset from the model");
  c_sim->add_option("--q", sim.q, "node count");
  c_sim->add_option("--p", sim.p, "covariate count");
  c_sim->add_option("--n", sim.n, "sample size");
  c_sim->add_option("--n-edges", sim.n_edges, "edge count of the scale-free graph");
  c_sim->add_option("--rho", sim.rho, "expected proportion of effective covariates per pair");
  c_sim->add_option("--beta", sim.beta, "signal magnitude");
  c_sim->add_option("--sweeps", sim.sweeps, "Gibbs sweeps per sample");
  c_sim->add_option("--seed", sim.seed, "RNG seed");
  c_sim->add_option("--threads", sim.threads, "worker threads");
  c_sim->add_option("--out", sim.out, "output directory");

  covising::cli::FitArgs fit;
  from_config(cfg, "data", fit.data);
  from_config(cfg, "out", fit.out);
  from_config(cfg, "mode", fit.mode);
  from_config(cfg, "lambda", fit.lambda);
  from_config(cfg, "init", fit.init);
  from_config(cfg, "tol", fit.tol);
  from_config(cfg, "max-passes", fit.max_passes);
  from_config(cfg, "no-standardize", fit.no_standardize);
  from_config(cfg, "threads", fit.threads);
  auto* c_fit = app.add_subcommand("fit", "penalized fit at a fixed lambda");
  c_fit->add_option("--data", fit.data, "dataset directory (X.csv, Y.csv)");
  c_fit->add_option("--out", fit.out, "output directory");
  c_fit->add_option("--mode", fit.mode, "separate-max | separate-min | joint");
  c_fit->add_option("--lambda", fit.lambda, "penalty level");
  c_fit->add_option("--init", fit.init, "warm-start theta json");
  c_fit->add_option("--tol", fit.tol, "convergence tolerance");
  c_fit->add_option("--max-passes", fit.max_passes, "coordinate cycle cap");
  c_fit->add_flag("--no-standardize", fit.no_standardize, "fit on raw covariate columns");
  c_fit->add_option("--threads", fit.threads, "worker threads");

  covising::cli::PathArgs path;
  from_config(cfg, "data", path.data);
  from_config(cfg, "out", path.out);
  from_config(cfg, "mode", path.mode);
  from_config(cfg, "lambda-grid", path.lambda_grid);
  from_config(cfg, "lambda-min-ratio", path.lambda_min_ratio);
  from_config(cfg, "tol", path.tol);
  from_config(cfg, "max-passes", path.max_passes);
  from_config(cfg, "no-standardize", path.no_standardize);
  from_config(cfg, "threads", path.threads);
  auto* c_path = app.add_subcommand("path", "regularization path over a lambda grid");
  c_path->add_option("--data", path.data, "dataset directory");
  c_path->add_option("--out", path.out, "output directory");
  c_path->add_option("--mode", path.mode, "separate-max | separate-min | joint");
  c_path->add_option("--lambda-grid", path.lambda_grid, "grid size");
  c_path->add_option("--lambda-min-ratio", path.lambda_min_ratio, "smallest lambda / lambda_max");
  c_path->add_option("--tol", path.tol, "convergence tolerance");
  c_path->add_option("--max-passes", path.max_passes, "coordinate cycle cap");
  c_path->add_flag("--no-standardize", path.no_standardize, "fit on raw covariate columns");
  c_path->add_option("--threads", path.threads, "worker threads");

  covising::cli::RocArgs roc;
  from_config(cfg, "data", roc.data);
  from_config(cfg, "truth", roc.truth);
  from_config(cfg, "out", roc.out);
  from_config(cfg, "mode", roc.mode);
  from_config(cfg, "scope", roc.scope);
  from_config(cfg, "lambda-grid", roc.lambda_grid);
  from_config(cfg, "lambda-min-ratio", roc.lambda_min_ratio);
  from_config(cfg, "tol", roc.tol);
  from_config(cfg, "max-passes", roc.max_passes);
  from_config(cfg, "no-standardize", roc.no_standardize);
  from_config(cfg, "threads", roc.threads);
  auto* c_roc = app.add_subcommand("roc", "support-recovery ROC against a known truth");
  c_roc->add_option("--data", roc.data, "dataset directory");
  c_roc->add_option("--truth", roc.truth, "theta_star.json");
  c_roc->add_option("--out", roc.out, "output directory");
  c_roc->add_option("--mode", roc.mode, "separate-max | separate-min | joint");
  c_roc->add_option("--scope", roc.scope, "all | edges");
  c_roc->add_option("--lambda-grid", roc.lambda_grid, "grid size");
  c_roc->add_option("--lambda-min-ratio", roc.lambda_min_ratio, "smallest lambda / lambda_max");
  c_roc->add_option("--tol", roc.tol, "convergence tolerance");
  c_roc->add_option("--max-passes", roc.max_passes, "coordinate cycle cap");
  c_roc->add_flag("--no-standardize", roc.no_standardize, "fit on raw covariate columns");
  c_roc->add_option("--threads", roc.threads, "worker threads");

  covising::cli::StabilityArgs stab;
  from_config(cfg, "data", stab.data);
  from_config(cfg, "out", stab.out);
  from_config(cfg, "mode", stab.mode);
  from_config(cfg, "subsamples", stab.subsamples);
  from_config(cfg, "lambda-grid", stab.lambda_grid);
  from_config(cfg, "lambda-min-ratio", stab.lambda_min_ratio);
  from_config(cfg, "seed", stab.seed);
  from_config(cfg, "tol", stab.tol);
  from_config(cfg, "max-passes", stab.max_passes);
  from_config(cfg, "no-standardize", stab.no_standardize);
  from_config(cfg, "threads", stab.threads);
  auto* c_stab = app.add_subcommand("stability", "selection frequencies over half-sample refits");
  c_stab->add_option("--data", stab.data, "dataset directory");
  c_stab->add_option("--out", stab.out, "output directory");
  c_stab->add_option("--mode", stab.mode, "separate-max | separate-min | joint");
  c_stab->add_option("--subsamples", stab.subsamples, "number of half-sample refits");
  c_stab->add_option("--lambda-grid", stab.lambda_grid, "grid size (computed on the full data)");
  c_stab->add_option("--lambda-min-ratio", stab.lambda_min_ratio, "smallest lambda / lambda_max");
  c_stab->add_option("--seed", stab.seed, "RNG seed for the subsamples");
  c_stab->add_option("--tol", stab.tol, "convergence tolerance");
  c_stab->add_option("--max-passes", stab.max_passes, "coordinate cycle cap");
  c_stab->add_flag("--no-standardize", stab.no_standardize, "fit on raw covariate columns");
  c_stab->add_option("--threads", stab.threads, "worker threads");

  covising::cli::HubsArgs hubs;
  from_config(cfg, "data", hubs.data);
  from_config(cfg, "out", hubs.out);
  from_config(cfg, "mode", hubs.mode);
  from_config(cfg, "val", hubs.val);
  from_config(cfg, "lambda", hubs.lambda);
  from_config(cfg, "subsamples", hubs.subsamples);
  from_config(cfg, "lambda-grid", hubs.lambda_grid);
  from_config(cfg, "lambda-min-ratio", hubs.lambda_min_ratio);
  from_config(cfg, "seed", hubs.seed);
  from_config(cfg, "tol", hubs.tol);
  from_config(cfg, "max-passes", hubs.max_passes);
  from_config(cfg, "no-standardize", hubs.no_standardize);
  from_config(cfg, "threads", hubs.threads);
  auto* c_hubs = app.add_subcommand("hubs", "covariate-specific hub ranking over subsamples");
  c_hubs->add_option("--data", hubs.data, "dataset directory");
  c_hubs->add_option("--out", hubs.out, "output directory");
  c_hubs->add_option("--mode", hubs.mode, "separate-max | separate-min | joint");
  c_hubs->add_option("--val", hubs.val, "validation dataset directory selecting the lambda");
  c_hubs->add_option("--lambda", hubs.lambda, "explicit lambda (nearest grid point is used)");
  c_hubs->add_option("--subsamples", hubs.subsamples, "number of half-sample refits");
  c_hubs->add_option("--lambda-grid", hubs.lambda_grid, "grid size");
  c_hubs->add_option("--lambda-min-ratio", hubs.lambda_min_ratio, "smallest lambda / lambda_max");
  c_hubs->add_option("--seed", hubs.seed, "RNG seed for the subsamples");
  c_hubs->add_option("--tol", hubs.tol, "convergence tolerance");
  c_hubs->add_option("--max-passes", hubs.max_passes, "coordinate cycle cap");
  c_hubs->add_flag("--no-standardize", hubs.no_standardize, "fit on raw covariate columns");
  c_hubs->add_option("--threads", hubs.threads, "worker threads");

  covising::cli::AssumptionsArgs assume;
  from_config(cfg, "truth", assume.truth);
  from_config(cfg, "data", assume.data);
  from_config(cfg, "mc", assume.mc);
  from_config(cfg, "out", assume.out);
  from_config(cfg, "seed", assume.seed);
  from_config(cfg, "sweeps", assume.sweeps);
  from_config(cfg, "lambda-n", assume.lambda_n);
  from_config(cfg, "m-n", assume.m_n);
  from_config(cfg, "const-c", assume.const_c);
  from_config(cfg, "delta", assume.delta);
  from_config(cfg, "threads", assume.threads);
  auto* c_assume = app.add_subcommand("assumptions", "incoherence / eigenvalue checks at theta*");
  c_assume->add_option("--truth", assume.truth, "theta_star.json");
  c_assume->add_option("--data", assume.data, "dataset directory (empirical matrices)");
  c_assume->add_option("--mc", assume.mc, "population Monte Carlo draws");
  c_assume->add_option("--out", assume.out, "output directory");
  c_assume->add_option("--seed", assume.seed, "RNG seed for the MC draws");
  c_assume->add_option("--sweeps", assume.sweeps, "Gibbs sweeps for large q");
  c_assume->add_option("--lambda-n", assume.lambda_n, "theorem input lambda_n");
  c_assume->add_option("--m-n", assume.m_n, "theorem input M_n");
  c_assume->add_option("--const-c", assume.const_c, "theorem constant C");
  c_assume->add_option("--delta", assume.delta, "covariate tail exponent delta");
  c_assume->add_option("--threads", assume.threads, "worker threads");

  for (CLI::App* sc : {c_sim, c_fit, c_path, c_roc, c_stab, c_hubs, c_assume})
    sc->add_option("--config", config_path, "JSON config file; explicit flags override it");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_sim->parsed()) return covising::cli::cmd_simulate(sim);
    if (c_fit->parsed()) return covising::cli::cmd_fit(fit);
    if (c_path->parsed()) return covising::cli::cmd_path(path);
    if (c_roc->parsed()) return covising::cli::cmd_roc(roc);
    if (c_stab->parsed()) return covising::cli::cmd_stability(stab);
    if (c_hubs->parsed()) return covising::cli::cmd_hubs(hubs);
    if (c_assume->parsed()) return covising::cli::cmd_assumptions(assume);
  } catch (const covising::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const covising::DimensionError& e) {
    std::cerr << "dimension error: " << e.what() << "\n";
    return kExitDimension;
  } catch (const covising::DegenerateResponseError& e) {
    std::cerr << "degenerate response: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const covising::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const covising::ValueError& e) {
    std::cerr << "invalid value: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
