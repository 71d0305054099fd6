#include "covising/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>

#include <json.hpp>

#include "covising/evaluate.hpp"
#include "covising/fit.hpp"
#include "covising/io.hpp"
#include "covising/simulate.hpp"
#include "covising/theory.hpp"

namespace covising::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void ensure_out_dir(const std::string& out) {
  if (out.empty()) throw ValueError("--out directory is required");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out + ": " + ec.message());
}

FitMode parse_mode(const std::string& mode) {
  if (mode == "separate-max") return FitMode::SeparateMax;
  if (mode == "separate-min") return FitMode::SeparateMin;
  if (mode == "joint") return FitMode::Joint;
  throw ValueError("unknown mode '" + mode + "' (separate-max | separate-min | joint)");
}

Scope parse_scope(const std::string& scope) {
  if (scope == "all") return Scope::AllPenalized;
  if (scope == "edges") return Scope::EdgesOnly;
  throw ValueError("unknown scope '" + scope + "' (all | edges)");
}

FitConfig make_fit_config(double tol, int max_passes, bool no_standardize, int threads,
                          const std::string& mode) {
  FitConfig cfg;
  cfg.tol = tol;
  cfg.max_passes = max_passes;
  cfg.standardize = !no_standardize;
  cfg.threads = threads;
  if (mode == "separate-min") cfg.symmetrize = SymmetrizeRule::SeparateMin;
  return cfg;
}

void write_config(const std::string& out, const json& doc) {
  io::write_text((fs::path(out) / "config_used.json").string(), doc.dump(2) + "\n");
}

// Support size over penalized coordinates (pair intercepts excluded).
std::int64_t penalized_support_size(const ThetaParams& theta) {
  std::int64_t count = 0;
  for (std::int64_t c = 0; c < theta.size(); ++c)
    if (theta.data()[c] != 0.0 && !theta.is_intercept_index(c)) ++count;
  return count;
}

void write_edge_list(const std::string& path, const ThetaParams& theta) {
  std::string out = "j\tk\tl\tvalue\n";
  for (std::int64_t c = 0; c < theta.size(); ++c) {
    double v = theta.data()[c];
    if (v == 0.0 || theta.is_intercept_index(c)) continue;
    auto [j, k, l] = theta.unflatten(c);
    out += std::to_string(j + 1) + "\t" + std::to_string(k + 1) + "\t" + std::to_string(l) +
           "\t" + io::format_double(v) + "\n";
  }
  io::write_text(path, out);
}

json fit_result_report(const FitResult& fit) {
  json doc;
  doc["lambda"] = fit.lambda;
  doc["objective"] = fit.objective;
  doc["kkt_residual"] = fit.kkt_residual;
  doc["passes"] = fit.passes;
  doc["converged"] = fit.converged;
  return doc;
}

void write_roc_svg(const std::string& path, const RocCurve& curve, double area) {
  const int W = 480, H = 480, M = 50;
  auto sx = [&](double v) { return M + v * (W - 2 * M); };
  auto sy = [&](double v) { return H - M - v * (H - 2 * M); };
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(W) +
                    "\" height=\"" + std::to_string(H) + "\">\n";
  svg += "<rect x=\"" + std::to_string(M) + "\" y=\"" + std::to_string(M) + "\" width=\"" +
         std::to_string(W - 2 * M) + "\" height=\"" + std::to_string(H - 2 * M) +
         "\" fill=\"white\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + std::to_string(sx(0)) + "\" y1=\"" + std::to_string(sy(0)) + "\" x2=\"" +
         std::to_string(sx(1)) + "\" y2=\"" + std::to_string(sy(1)) +
         "\" stroke=\"gray\" stroke-dasharray=\"4\"/>\n";
  std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
  for (const auto& p : curve.points) pts.emplace_back(p.one_minus_specificity, p.sensitivity);
  pts.emplace_back(1.0, 1.0);
  std::sort(pts.begin(), pts.end());
  svg += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (const auto& [x, y] : pts)
    svg += std::to_string(sx(x)) + "," + std::to_string(sy(y)) + " ";
  svg += "\"/>\n";
  svg += "<text x=\"" + std::to_string(W / 2 - 60) + "\" y=\"" + std::to_string(H - 12) +
         "\">1 - specificity</text>\n";
  svg += "<text x=\"12\" y=\"" + std::to_string(H / 2) +
         "\" transform=\"rotate(-90 16," + std::to_string(H / 2) + ")\">sensitivity</text>\n";
  svg += "<text x=\"" + std::to_string(M + 8) + "\" y=\"" + std::to_string(M - 8) +
         "\">AUC = " + io::format_double(area) + "</text>\n";
  svg += "</svg>\n";
  io::write_text(path, svg);
}

std::vector<double> grid_for(const Dataset& data, FitMode mode, const FitConfig& cfg, int count,
                             double min_ratio) {
  return lambda_grid(lambda_max(data, mode, cfg), count, min_ratio);
}

void write_stability_files(const std::string& out, const StabilitySummary& summary) {
  // stability.csv: penalized coordinates with f* and the lambda attaining it
  // (the largest such lambda).
  ThetaParams layout(summary.dims);
  std::string csv = "j,k,l,fstar,lambda_at_max\n";
  for (std::int64_t c = 0; c < layout.size(); ++c) {
    if (layout.is_intercept_index(c)) continue;
    auto [j, k, l] = layout.unflatten(c);
    int arg = 0;
    for (int i = 0; i < static_cast<int>(summary.lambdas.size()); ++i)
      if (summary.freq(c, i) >= summary.fstar[c]) {
        arg = i;
        break;
      }
    csv += std::to_string(j + 1) + "," + std::to_string(k + 1) + "," + std::to_string(l) + "," +
           io::format_double(summary.fstar[c]) + "," + io::format_double(summary.lambdas[arg]) +
           "\n";
  }
  io::write_text((fs::path(out) / "stability.csv").string(), csv);

  for (int l = 0; l <= summary.dims.p; ++l) {
    auto ranked = rank_edges(summary, l);
    std::string tsv = "j\tk\tfstar\n";
    for (auto [j, k, f] : ranked)
      tsv += std::to_string(j + 1) + "\t" + std::to_string(k + 1) + "\t" + io::format_double(f) +
             "\n";
    io::write_text((fs::path(out) / ("edge_rank_" + std::to_string(l) + ".tsv")).string(), tsv);
  }
}

}  // namespace

int cmd_simulate(const SimulateArgs& args) {
  ensure_out_dir(args.out);
  SimConfig config;
  config.dims = ModelDims(args.q, args.p);
  config.n = args.n;
  config.n_edges = args.n_edges;
  config.rho = args.rho;
  config.beta = args.beta;
  config.gibbs_sweeps = args.sweeps;
  config.seed = args.seed;

  SimResult sim = simulate_dataset(config, args.threads);
  io::write_dataset(args.out, sim.data);
  io::write_theta_json((fs::path(args.out) / "theta_star.json").string(), sim.truth.theta_star);
  io::write_graph_tsv((fs::path(args.out) / "graph.tsv").string(), sim.graph);

  json doc;
  doc["command"] = "simulate";
  doc["q"] = args.q;
  doc["p"] = args.p;
  doc["n"] = args.n;
  doc["n-edges"] = args.n_edges;
  doc["rho"] = args.rho;
  doc["beta"] = args.beta;
  doc["sweeps"] = args.sweeps;
  doc["seed"] = args.seed;
  doc["threads"] = args.threads;
  write_config(args.out, doc);
  return kExitOk;
}

int cmd_fit(const FitArgs& args) {
  ensure_out_dir(args.out);
  if (args.lambda < 0.0) throw ValueError("fit: --lambda is required and must be >= 0");
  FitMode mode = parse_mode(args.mode);
  FitConfig cfg = make_fit_config(args.tol, args.max_passes, args.no_standardize, args.threads,
                                  args.mode);
  Dataset data = io::read_dataset(args.data);

  ThetaParams init;
  bool have_init = false;
  if (!args.init.empty()) {
    init = io::read_theta_json(args.init);
    have_init = true;
  }

  FitResult fit;
  if (mode == FitMode::Joint) {
    fit = fit_joint(data, args.lambda, cfg, have_init ? &init : nullptr);
  } else {
    fit = fit_separate(data, args.lambda, cfg, have_init ? &init : nullptr).first;
  }

  io::write_theta_json((fs::path(args.out) / "theta_hat.json").string(), fit.theta_hat);
  write_edge_list((fs::path(args.out) / "edge_list.tsv").string(), fit.theta_hat);

  json report = fit_result_report(fit);
  report["mode"] = args.mode;
  report["lambda_max"] = lambda_max(data, mode, cfg);
  report["support_size"] = penalized_support_size(fit.theta_hat);
  report["warnings"] = json::array();
  if (!fit.converged)
    report["warnings"].push_back("did not converge within max_passes");
  io::write_text((fs::path(args.out) / "fit_report.json").string(), report.dump(2) + "\n");

  json doc;
  doc["command"] = "fit";
  doc["data"] = args.data;
  doc["mode"] = args.mode;
  doc["lambda"] = args.lambda;
  doc["init"] = args.init;
  doc["tol"] = args.tol;
  doc["max-passes"] = args.max_passes;
  doc["no-standardize"] = args.no_standardize;
  doc["threads"] = args.threads;
  write_config(args.out, doc);
  return fit.converged ? kExitOk : kExitNoConvergence;
}

int cmd_path(const PathArgs& args) {
  ensure_out_dir(args.out);
  FitMode mode = parse_mode(args.mode);
  FitConfig cfg = make_fit_config(args.tol, args.max_passes, args.no_standardize, args.threads,
                                  args.mode);
  Dataset data = io::read_dataset(args.data);
  std::vector<double> grid = grid_for(data, mode, cfg, args.lambda_grid, args.lambda_min_ratio);
  std::vector<FitResult> path = fit_path(data, grid, mode, cfg);

  std::string csv = "lambda,support_size,objective\n";
  bool all_converged = true;
  for (const FitResult& fit : path) {
    csv += io::format_double(fit.lambda) + "," +
           std::to_string(penalized_support_size(fit.theta_hat)) + "," +
           io::format_double(fit.objective) + "\n";
    all_converged = all_converged && fit.converged;
  }
  io::write_text((fs::path(args.out) / "path.csv").string(), csv);

  json doc;
  doc["command"] = "path";
  doc["data"] = args.data;
  doc["mode"] = args.mode;
  doc["lambda-grid"] = args.lambda_grid;
  doc["lambda-min-ratio"] = args.lambda_min_ratio;
  doc["tol"] = args.tol;
  doc["max-passes"] = args.max_passes;
  doc["no-standardize"] = args.no_standardize;
  doc["threads"] = args.threads;
  write_config(args.out, doc);
  return all_converged ? kExitOk : kExitNoConvergence;
}

int cmd_roc(const RocArgs& args) {
  ensure_out_dir(args.out);
  FitMode mode = parse_mode(args.mode);
  Scope scope = parse_scope(args.scope);
  FitConfig cfg = make_fit_config(args.tol, args.max_passes, args.no_standardize, args.threads,
                                  args.mode);
  Dataset data = io::read_dataset(args.data);
  GroundTruth truth;
  truth.theta_star = io::read_theta_json(args.truth);
  truth.support = truth.theta_star.support();
  if (truth.theta_star.dims() != data.dims())
    throw DimensionError("roc: truth dims disagree with the dataset");

  std::vector<double> grid = grid_for(data, mode, cfg, args.lambda_grid, args.lambda_min_ratio);
  std::vector<FitResult> path = fit_path(data, grid, mode, cfg);
  RocCurve curve = roc_curve(path, truth, scope);
  double area = auc(curve);

  std::string csv = "lambda,sensitivity,one_minus_specificity,tp,fp,tn,fn\n";
  for (const RocPoint& pt : curve.points)
    csv += io::format_double(pt.lambda) + "," + io::format_double(pt.sensitivity) + "," +
           io::format_double(pt.one_minus_specificity) + "," + std::to_string(pt.counts.tp) +
           "," + std::to_string(pt.counts.fp) + "," + std::to_string(pt.counts.tn) + "," +
           std::to_string(pt.counts.fn) + "\n";
  io::write_text((fs::path(args.out) / "roc.csv").string(), csv);
  write_roc_svg((fs::path(args.out) / "roc.svg").string(), curve, area);

  json report;
  report["auc"] = area;
  report["scope"] = args.scope;
  report["mode"] = args.mode;
  io::write_text((fs::path(args.out) / "roc_report.json").string(), report.dump(2) + "\n");
  std::cout << "auc " << io::format_double(area) << "\n";

  json doc;
  doc["command"] = "roc";
  doc["data"] = args.data;
  doc["truth"] = args.truth;
  doc["mode"] = args.mode;
  doc["scope"] = args.scope;
  doc["lambda-grid"] = args.lambda_grid;
  doc["lambda-min-ratio"] = args.lambda_min_ratio;
  doc["tol"] = args.tol;
  doc["max-passes"] = args.max_passes;
  doc["no-standardize"] = args.no_standardize;
  doc["threads"] = args.threads;
  write_config(args.out, doc);
  return kExitOk;
}

int cmd_stability(const StabilityArgs& args) {
  ensure_out_dir(args.out);
  FitMode mode = parse_mode(args.mode);
  FitConfig cfg = make_fit_config(args.tol, args.max_passes, args.no_standardize, args.threads,
                                  args.mode);
  Dataset data = io::read_dataset(args.data);
  std::vector<double> grid = grid_for(data, mode, cfg, args.lambda_grid, args.lambda_min_ratio);

  StabilityConfig stab;
  stab.n_subsamples = args.subsamples;
  stab.seed = args.seed;
  stab.mode = mode;
  stab.threads = args.threads;
  StabilitySummary summary = stability_selection(data, grid, stab, cfg);
  write_stability_files(args.out, summary);

  json report;
  report["n_subsamples"] = summary.n_subsamples;
  report["subsample_fraction"] = summary.subsample_fraction;
  report["skipped_node_fits"] = summary.skipped_node_fits;
  report["lambdas"] = summary.lambdas;
  io::write_text((fs::path(args.out) / "stability_report.json").string(), report.dump(2) + "\n");

  json doc;
  doc["command"] = "stability";
  doc["data"] = args.data;
  doc["mode"] = args.mode;
  doc["subsamples"] = args.subsamples;
  doc["lambda-grid"] = args.lambda_grid;
  doc["lambda-min-ratio"] = args.lambda_min_ratio;
  doc["seed"] = args.seed;
  doc["tol"] = args.tol;
  doc["max-passes"] = args.max_passes;
  doc["no-standardize"] = args.no_standardize;
  doc["threads"] = args.threads;
  write_config(args.out, doc);
  return kExitOk;
}

int cmd_hubs(const HubsArgs& args) {
  ensure_out_dir(args.out);
  FitMode mode = parse_mode(args.mode);
  FitConfig cfg = make_fit_config(args.tol, args.max_passes, args.no_standardize, args.threads,
                                  args.mode);
  Dataset data = io::read_dataset(args.data);
  std::vector<double> grid = grid_for(data, mode, cfg, args.lambda_grid, args.lambda_min_ratio);

  int designated = -1;
  double designated_lambda = 0.0;
  if (!args.val.empty()) {
    Dataset valid = io::read_dataset(args.val);
    auto [lam, fit] = select_lambda_validation(data, valid, grid, mode, cfg);
    (void)fit;
    designated_lambda = lam;
  } else if (args.lambda >= 0.0) {
    designated_lambda = args.lambda;
  } else {
    throw ValueError("hubs: either --val or --lambda must be given to fix the fitting lambda");
  }
  double best_gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(grid.size()); ++i) {
    double gap = std::abs(grid[i] - designated_lambda);
    if (gap < best_gap) {
      best_gap = gap;
      designated = i;
    }
  }

  StabilityConfig stab;
  stab.n_subsamples = args.subsamples;
  stab.seed = args.seed;
  stab.mode = mode;
  stab.threads = args.threads;
  stab.designated_lambda = designated;
  StabilitySummary summary = stability_selection(data, grid, stab, cfg);

  for (int l = 0; l <= data.p(); ++l) {
    HubRanking ranking = hub_ranking(summary.support_at_designated, data.dims(), l);
    std::string tsv = "node\tmedian_rank\n";
    for (auto [node, rank] : ranking.median_ranks)
      tsv += std::to_string(node + 1) + "\t" + io::format_double(rank) + "\n";
    io::write_text((fs::path(args.out) / ("hub_rank_" + std::to_string(l) + ".tsv")).string(),
                   tsv);
  }

  json report;
  report["designated_lambda"] = grid[designated];
  report["designated_index"] = designated;
  report["skipped_node_fits"] = summary.skipped_node_fits;
  io::write_text((fs::path(args.out) / "hubs_report.json").string(), report.dump(2) + "\n");

  json doc;
  doc["command"] = "hubs";
  doc["data"] = args.data;
  doc["mode"] = args.mode;
  doc["val"] = args.val;
  doc["lambda"] = args.lambda;
  doc["subsamples"] = args.subsamples;
  doc["lambda-grid"] = args.lambda_grid;
  doc["lambda-min-ratio"] = args.lambda_min_ratio;
  doc["seed"] = args.seed;
  doc["tol"] = args.tol;
  doc["max-passes"] = args.max_passes;
  doc["no-standardize"] = args.no_standardize;
  doc["threads"] = args.threads;
  write_config(args.out, doc);
  return kExitOk;
}

int cmd_assumptions(const AssumptionsArgs& args) {
  ensure_out_dir(args.out);
  if (args.truth.empty()) throw ValueError("assumptions: --truth theta_star.json is required");
  if (args.data.empty() && args.mc <= 0)
    throw ValueError("assumptions: either --data or --mc N is required");
  ThetaParams theta_star = io::read_theta_json(args.truth);
  const ModelDims dims = theta_star.dims();

  Dataset data;
  if (!args.data.empty()) {
    data = io::read_dataset(args.data);
    if (data.dims() != dims) throw DimensionError("assumptions: dataset dims disagree with truth");
  }

  json nodes = json::array();
  int d_max = 0;
  for (int j = 0; j < dims.q; ++j) {
    InfoMatrices info;
    if (!args.data.empty()) {
      info = empirical_info(data, theta_star, j);
    } else {
      Rng rng = substream(args.seed, 7000 + j);
      info = population_info_mc(theta_star, standard_normal_sampler(dims.p), j, args.mc, rng,
                                args.sweeps);
    }
    std::vector<int> support = node_support(theta_star, j);
    d_max = std::max(d_max, static_cast<int>(support.size()));
    AssumptionCheck check = check_assumptions(info, support);

    json entry;
    entry["node"] = j + 1;
    entry["support_size"] = support.size();
    entry["invertible"] = check.invertible;
    entry["vacuous"] = support.empty();
    if (std::isfinite(check.incoherence)) entry["incoherence"] = check.incoherence;
    if (std::isfinite(check.alpha_slack)) entry["alpha_slack"] = check.alpha_slack;
    entry["delta_min"] = std::isfinite(check.delta_min) ? json(check.delta_min) : json();
    entry["delta_max"] = check.delta_max;
    entry["source"] = info.source == InfoSource::Empirical ? "empirical" : "population-mc";
    if (info.source == InfoSource::PopulationMC) {
      entry["se_max_I"] = info.se_max_I;
      entry["se_max_U"] = info.se_max_U;
    }
    nodes.push_back(entry);
  }

  json report;
  report["nodes"] = nodes;
  report["d"] = d_max;
  if (args.lambda_n >= 0.0 && args.m_n > 0.0) {
    double delta_min_all = std::numeric_limits<double>::infinity();
    for (const auto& entry : nodes)
      if (entry.contains("delta_min") && !entry["delta_min"].is_null())
        delta_min_all = std::min(delta_min_all, entry["delta_min"].get<double>());
    TheoremInputs in;
    in.lambda_n = args.lambda_n;
    in.n = args.data.empty() ? args.mc : data.n();
    in.M_n = args.m_n;
    in.d = d_max;
    in.p = dims.p;
    in.q = dims.q;
    in.C = args.const_c;
    in.delta = args.delta;
    in.delta_min = delta_min_all;
    TheoremCheck check = theorem_conditions(in);
    json theorem;
    theorem["cond_M"] = check.cond_M;
    theorem["cond_lambda"] = check.cond_lambda;
    theorem["cond_n"] = check.cond_n;
    theorem["l2_bound"] = check.l2_bound;
    theorem["sign_threshold"] = check.sign_threshold;
    report["theorem"] = theorem;
  }
  io::write_text((fs::path(args.out) / "assumption_report.json").string(), report.dump(2) + "\n");

  json doc;
  doc["command"] = "assumptions";
  doc["truth"] = args.truth;
  doc["data"] = args.data;
  doc["mc"] = args.mc;
  doc["seed"] = args.seed;
  doc["sweeps"] = args.sweeps;
  doc["lambda-n"] = args.lambda_n;
  doc["m-n"] = args.m_n;
  doc["const-c"] = args.const_c;
  doc["delta"] = args.delta;
  doc["threads"] = args.threads;
  write_config(args.out, doc);
  return kExitOk;
}

}  // namespace covising::cli
