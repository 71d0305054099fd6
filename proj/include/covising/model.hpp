#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "covising/errors.hpp"

namespace covising {

// Problem dimensions: q binary nodes, p real covariates.
struct ModelDims {
  int q = 1;
  int p = 0;
  ModelDims() = default;
  ModelDims(int q_, int p_) : q(q_), p(p_) {
    if (q < 1) throw ValueError("ModelDims: q must be >= 1");
    if (p < 0) throw ValueError("ModelDims: p must be >= 0");
  }
  bool operator==(const ModelDims&) const = default;
};

// Total free parameters: (p+1) * q * (q+1) / 2.
std::int64_t num_parameters(ModelDims dims);

/**
 * Symmetric coefficient tensor theta[j][k][l] over unordered node pairs
 * (0 <= j,k < q) and covariate slots l = 0..p. Slot l = 0 is the pair
 * intercept, slot l >= 1 multiplies covariate l. Storage is canonical
 * (j <= k), so theta(j,k,l) == theta(k,j,l) holds structurally.
 *
 * Flat layout: pairs in order (0,0),(0,1),...,(0,q-1),(1,1),...,(q-1,q-1),
 * each pair holding its p+1 slots contiguously.
 */
class ThetaParams {
 public:
  ThetaParams() : ThetaParams(ModelDims{}) {}
  explicit ThetaParams(ModelDims dims)
      : dims_(dims), coef_(static_cast<std::size_t>(num_parameters(dims)), 0.0) {}

  const ModelDims& dims() const { return dims_; }
  std::int64_t size() const { return static_cast<std::int64_t>(coef_.size()); }

  double operator()(int j, int k, int l) const { return coef_[flat_index(j, k, l)]; }
  void set(int j, int k, int l, double v) { coef_[flat_index(j, k, l)] = v; }

  std::int64_t pair_index(int j, int k) const;
  std::int64_t flat_index(int j, int k, int l) const;
  // Inverse of flat_index: returns {j, k, l} with j <= k.
  std::array<int, 3> unflatten(std::int64_t idx) const;
  bool is_intercept_index(std::int64_t idx) const;

  const std::vector<double>& data() const { return coef_; }
  std::vector<double>& data() { return coef_; }

  // Flat indices of nonzero coefficients, ascending.
  std::vector<std::int64_t> support() const;

 private:
  ModelDims dims_;
  std::vector<double> coef_;
};

// Covariate matrix X (n x p) paired with binary responses Y (n x q).
// The constructor enforces equal row counts, finite X and Y entries in {0,1}.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::MatrixXd Y;

  Dataset() = default;
  Dataset(Eigen::MatrixXd X_, Eigen::MatrixXd Y_);

  int n() const { return static_cast<int>(Y.rows()); }
  int p() const { return static_cast<int>(X.cols()); }
  int q() const { return static_cast<int>(Y.cols()); }
  ModelDims dims() const { return ModelDims(q(), p()); }
};

/**
 * Node j's slice of theta as one dense vector, the coordinate space of its
 * conditional regression. Laid out k-major: entry (k, l) sits at
 * k*(p+1) + l, covering k = 0..q-1 and l = 0..p. The (k = j, l = 0) slot is
 * the regression intercept; the k = j, l >= 1 slots are the node's own
 * covariate main effects.
 */
struct NodeSubvector {
  int node = 0;
  Eigen::VectorXd values;

  static int index(int k, int l, int p) { return k * (p + 1) + l; }
};

double sigmoid(double t);   // numerically stable at both tails
double log1pexp(double t);  // log(1 + e^t) without overflow

// theta_jk(x) = theta_jk0 + theta_jk . x, symmetric in (j,k).
double edge_strength(const ThetaParams& theta, const Eigen::VectorXd& x, int j, int k);

// q x q matrix of edge_strength values for a fixed x (diagonal = node terms).
Eigen::MatrixXd strength_matrix(const ThetaParams& theta, const Eigen::VectorXd& x);

// Log-odds of y_j = 1 given x and the other responses:
//   theta_jj0 + theta_jj.x + sum_{k != j} (theta_jk0 + theta_jk.x) y_k.
double conditional_logit(const ThetaParams& theta, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& y, int j);

double conditional_prob(const ThetaParams& theta, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& y, int j);

// Negative mean conditional log-likelihood of node j:
//   (1/n) sum_i [log(1 + e^eta_i) - y_ji * eta_i],  eta_i = conditional_logit.
// Convex and minimized by the fitting routines.
double neg_cond_loglik(const ThetaParams& theta, const Dataset& data, int j);

// Gradient of neg_cond_loglik over NodeSubvector coordinates: entry (k,l)
// is (1/n) sum_i z_ikl (p_ji - y_ji) with feature z_ikl = x_il * y_ik,
// where x_i0 = 1 and the k = j slot uses y_ij = 1.
Eigen::VectorXd grad_neg_cond_loglik(const ThetaParams& theta, const Dataset& data, int j);

// Sum over nodes of neg_cond_loglik.
double pseudo_neg_loglik(const ThetaParams& theta, const Dataset& data);

// Exact joint pmf over all 2^q outcomes for a fixed x, computed by
// enumeration with log-sum-exp normalization. Entry `mask` is the
// probability of the outcome with y_j = bit j of mask. Guarded at q <= 20.
Eigen::VectorXd exact_pmf(const ThetaParams& theta, const Eigen::VectorXd& x);

// Gather/scatter between ThetaParams and node j's subvector.
NodeSubvector node_subvector(const ThetaParams& theta, int j);
void set_node_subvector(ThetaParams& theta, const NodeSubvector& sub);

}  // namespace covising
