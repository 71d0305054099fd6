#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "covising/model.hpp"

namespace covising {

enum class SymmetrizeRule { SeparateMax, SeparateMin };
enum class FitMode { SeparateMax, SeparateMin, Joint };

struct FitConfig {
  double tol = 1e-6;      // convergence gate on max coefficient change per pass
  int max_passes = 10000; // cap on coordinate cycles
  // Scale covariate columns to unit variance before fitting (estimates are
  // mapped back to the original scale, which preserves exact zeros). The
  // penalty, lambda values and KKT residuals all refer to the scaled problem.
  bool standardize = true;
  SymmetrizeRule symmetrize = SymmetrizeRule::SeparateMax;
  int threads = 1;
  bool track_objective = false;  // record the penalized objective after every pass
};

// Raw solution of one node's regression, before any symmetrization.
// theta values are on the original covariate scale.
struct NodeFit {
  NodeSubvector theta;
  double lambda = 0.0;
  double objective = 0.0;      // penalized objective actually minimized
  double kkt_residual = 0.0;   // max subgradient violation at the solution
  int passes = 0;
  bool converged = false;
  std::vector<double> objective_history;  // filled when track_objective
};

struct FitResult {
  ThetaParams theta_hat;
  double lambda = 0.0;
  double objective = 0.0;
  // For joint fits: the joint subgradient residual. For separate fits: the
  // max residual over the q raw node problems (the symmetrized estimate is a
  // post-processing step, not an optimizer output).
  double kkt_residual = 0.0;
  int passes = 0;  // max over node problems for separate fits
  bool converged = false;
  std::vector<double> objective_history;
};

using NodeEstimates = std::vector<NodeFit>;

// sign(z) * max(|z| - gamma, 0)
double soft_threshold(double z, double gamma);

/**
 * l1-penalized logistic regression of node j on all other responses and
 * their covariate interactions, by cyclic coordinate shooting. Each update
 * uses the exact coordinate gradient and the 1/4 logistic curvature bound,
 * so every pass decreases the penalized objective and zeros are exact. The
 * intercept (k = j, l = 0 slot) is never penalized. Convergence is certified
 * by the KKT residual (<= 10 * tol), not by step size alone.
 *
 * `init`, when given, is an original-scale warm start.
 * Throws DegenerateResponseError when column j of Y is constant.
 */
NodeFit fit_node(const Dataset& data, int j, double lambda, const FitConfig& config = {},
                 const NodeSubvector* init = nullptr);

// Smallest lambda at which node j's penalized solution is all-zero: the max
// absolute penalized gradient coordinate at the intercept-only fit.
double lambda_max_node(const Dataset& data, int j, const FitConfig& config = {});

// Path entry point for either method; for the separate modes this is the max
// of lambda_max_node over nodes, for the joint mode the max absolute joint
// gradient coordinate at the intercepts-only fit.
double lambda_max(const Dataset& data, FitMode mode, const FitConfig& config = {});

// Descending log-spaced grid from lambda_max down to min_ratio * lambda_max.
std::vector<double> lambda_grid(double lambda_max, int count = 50, double min_ratio = 0.01);

/**
 * Separate method: q independent node regressions, then symmetrization of
 * the off-diagonal coefficients under config.symmetrize (separate-max keeps
 * the larger-magnitude raw estimate, separate-min the smaller; on exact
 * magnitude ties the estimate from the smaller node index is kept). Node
 * diagonals (j, j, l) are taken from node j's own regression.
 */
std::pair<FitResult, NodeEstimates> fit_separate(const Dataset& data, double lambda,
                                                 const FitConfig& config = {},
                                                 const ThetaParams* init = nullptr);

// The separate methods' post-processing step, exposed for callers that run
// node fits themselves.
ThetaParams symmetrize_estimates(const NodeEstimates& raws, SymmetrizeRule rule, ModelDims dims);

/**
 * Joint method: minimizes sum_j l_j(theta) + lambda * ||theta \ intercepts||_1
 * over the symmetric parameter directly; a coefficient (j, k, l) with j != k
 * receives gradient from both regression j and regression k.
 */
FitResult fit_joint(const Dataset& data, double lambda, const FitConfig& config = {},
                    const ThetaParams* init = nullptr);

// Warm-started fits over a strictly descending lambda grid.
std::vector<FitResult> fit_path(const Dataset& data, const std::vector<double>& lambdas,
                                FitMode mode, const FitConfig& config = {});

// Path fit that tolerates constant response columns instead of throwing:
// such nodes' regressions are dropped (separate: their raw estimates are
// recorded as all-zero; joint: their likelihood term is excluded) and the
// number of dropped nodes is written to *skipped_nodes. Used by stability
// selection, where degenerate half-samples are expected.
std::vector<FitResult> fit_path_tolerant(const Dataset& data, const std::vector<double>& lambdas,
                                         FitMode mode, const FitConfig& config = {},
                                         int* skipped_nodes = nullptr);

/**
 * Max violation of the subgradient optimality conditions at theta: for a
 * penalized coordinate, distance of the gradient to [-lambda, lambda] when
 * the coefficient is zero and |gradient + lambda * sign| otherwise;
 * |gradient| for intercepts. Separate modes evaluate each node's subvector
 * against its own regression; the joint mode evaluates the summed gradient
 * on canonical coordinates. Uses the same scaling convention as fitting
 * (config.standardize).
 */
double kkt_residual(const ThetaParams& theta, const Dataset& data, double lambda,
                    FitMode mode, const FitConfig& config = {});

}  // namespace covising
