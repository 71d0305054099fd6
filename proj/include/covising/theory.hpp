#pragma once

#include <functional>
#include <vector>

#include "covising/model.hpp"
#include "covising/rng.hpp"

namespace covising {

enum class InfoSource { Empirical, PopulationMC };

/**
 * Information matrices of node j's conditional regression over the full
 * (p+1)q feature map z = (1, x) (x) (y with slot j = 1):
 *   I = E[ p_j (1 - p_j) z z^T ]   (the Hessian of the node's negative
 *                                   conditional log-likelihood)
 *   U = E[ z z^T ]
 * Empirical versions average over the sample; population versions are Monte
 * Carlo expectations under the model. Coordinates match NodeSubvector, so
 * the (l = 0, k = j) slot is the constant/intercept feature.
 */
struct InfoMatrices {
  int node = 0;
  ModelDims dims;
  Eigen::MatrixXd I;
  Eigen::MatrixXd U;
  InfoSource source = InfoSource::Empirical;
  int n_draws = 0;       // sample size / MC draws
  double se_max_I = 0.0; // max entrywise MC standard error (0 for empirical)
  double se_max_U = 0.0;
};

// Feature map of node j's regression for one observation, NodeSubvector
// layout: entry (k, l) = x_l * y_k with x_0 = 1 and y_j replaced by 1.
Eigen::VectorXd feature_vector(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int j,
                               ModelDims dims);

// Finite-sample averages at theta: I = (1/n) sum p(1-p) z z^T, U = (1/n) sum z z^T.
InfoMatrices empirical_info(const Dataset& data, const ThetaParams& theta, int j);

using CovariateSampler = std::function<Eigen::VectorXd(Rng&)>;
CovariateSampler standard_normal_sampler(int p);

/**
 * Monte Carlo estimate of the population I*, U* at theta_star: x from the
 * sampler, y from the exact conditional model given x (enumerated pmf when
 * q <= 12, Gibbs with `gibbs_sweeps` sweeps otherwise). Entrywise standard
 * errors are tracked; the max is reported in se_max_I / se_max_U. Draws run
 * in a fixed number of chunks with independent sub-streams and are reduced
 * in chunk order, so the result does not depend on the thread count.
 */
InfoMatrices population_info_mc(const ThetaParams& theta_star, const CovariateSampler& sample_x,
                                int j, int n_mc, Rng& rng, int gibbs_sweeps = 500,
                                int threads = 1);

/**
 * Incoherence and eigenvalue checks on one node's information matrices.
 * Analysis coordinates exclude the intercept slot (the asymptotic theory
 * drops the intercept); the support S must therefore not contain it.
 *   incoherence = || I_{S^c S} I_{S S}^{-1} ||_inf   (0 when S^c is empty)
 *   alpha_slack = 1 - incoherence
 *   delta_min   = smallest eigenvalue of I_{S S}
 *   delta_max   = largest eigenvalue of U restricted to analysis coordinates
 * A singular I_SS is reported (invertible = false, incoherence/alpha_slack
 * NaN), never thrown.
 */
struct AssumptionCheck {
  int node = 0;
  std::vector<int> support;
  bool invertible = true;
  double incoherence = 0.0;
  double alpha_slack = 1.0;
  double delta_min = 0.0;
  double delta_max = 0.0;
};

AssumptionCheck check_assumptions(const InfoMatrices& info, const std::vector<int>& support);

// Support of node j's subvector of theta (NodeSubvector coordinates,
// intercept slot excluded) - the S_j fed to check_assumptions.
std::vector<int> node_support(const ThetaParams& theta, int j);

// Scaling conditions of the consistency theorem and its error bounds. The
// constant C and tail exponent delta are caller-supplied; no defaults are
// claimed. log(p) and log(q) use max(value, 1) so p = 0 stays finite.
struct TheoremInputs {
  double lambda_n = 0.0;
  double n = 0.0;
  double M_n = 0.0;
  double d = 0.0;       // max support size over nodes
  double p = 0.0;
  double q = 0.0;
  double C = 1.0;
  double delta = 1.0;
  double delta_min = 1.0;  // eigenvalue floor from check_assumptions
};

struct TheoremCheck {
  bool cond_M = false;       // M_n >= (C lambda^2 n)^{1/(1+delta)}
  bool cond_lambda = false;  // lambda >= C M_n sqrt((log p + log q)/n)
  bool cond_n = false;       // n >= C M_n^2 d^3 (log p + log q)
  double l2_bound = 0.0;        // 5 lambda sqrt(d) / delta_min
  double sign_threshold = 0.0;  // 10 lambda sqrt(d) / delta_min
};

TheoremCheck theorem_conditions(const TheoremInputs& in);

}  // namespace covising
