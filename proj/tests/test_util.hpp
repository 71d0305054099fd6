#pragma once

// Shared helpers for the unit and acceptance suites: random instances and
// the independent oracles (finite differences, proximal-gradient optimizer,
// enumeration) that implementation results are checked against.

#include <cmath>
#include <random>
#include <vector>

#include "covising/model.hpp"
#include "covising/rng.hpp"

namespace testutil {

using covising::Dataset;
using covising::ModelDims;
using covising::NodeSubvector;
using covising::Rng;
using covising::ThetaParams;

inline ThetaParams random_theta(ModelDims dims, double magnitude, Rng& rng,
                                double density = 1.0) {
  std::uniform_real_distribution<double> unif(-magnitude, magnitude);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  ThetaParams theta(dims);
  for (int j = 0; j < dims.q; ++j)
    for (int k = j; k < dims.q; ++k)
      for (int l = 0; l <= dims.p; ++l)
        if (coin(rng) < density) theta.set(j, k, l, unif(rng));
  return theta;
}

inline Eigen::VectorXd random_x(int p, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd x(p);
  for (int l = 0; l < p; ++l) x[l] = normal(rng);
  return x;
}

inline Eigen::VectorXd random_y(int q, Rng& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  Eigen::VectorXd y(q);
  for (int j = 0; j < q; ++j) y[j] = coin(rng) < 0.5 ? 1.0 : 0.0;
  return y;
}

// Random dataset with iid covariates and coin-flip responses (not from the
// model; enough for likelihood/optimizer algebra).
inline Dataset random_dataset(int n, ModelDims dims, Rng& rng) {
  Eigen::MatrixXd X(n, dims.p), Y(n, dims.q);
  for (int i = 0; i < n; ++i) {
    X.row(i) = random_x(dims.p, rng).transpose();
    Y.row(i) = random_y(dims.q, rng).transpose();
  }
  // coordinate-descent preconditions want non-constant response columns
  for (int j = 0; j < dims.q; ++j) {
    Y(0, j) = 0.0;
    Y(1, j) = 1.0;
  }
  return Dataset(std::move(X), std::move(Y));
}

// Central finite differences of neg_cond_loglik over node j's subvector.
inline Eigen::VectorXd fd_gradient(const ThetaParams& theta, const Dataset& data, int j,
                                   double h = 1e-5) {
  const ModelDims dims = theta.dims();
  const int m = (dims.p + 1) * dims.q;
  Eigen::VectorXd g(m);
  for (int k = 0; k < dims.q; ++k)
    for (int l = 0; l <= dims.p; ++l) {
      ThetaParams up = theta, dn = theta;
      up.set(j, k, l, theta(j, k, l) + h);
      dn.set(j, k, l, theta(j, k, l) - h);
      g[NodeSubvector::index(k, l, dims.p)] =
          (covising::neg_cond_loglik(up, data, j) - covising::neg_cond_loglik(dn, data, j)) /
          (2.0 * h);
    }
  return g;
}

// Central finite differences of the analytic gradient: Hessian column probe.
inline Eigen::MatrixXd fd_hessian(const ThetaParams& theta, const Dataset& data, int j,
                                  double h = 1e-4) {
  const ModelDims dims = theta.dims();
  const int m = (dims.p + 1) * dims.q;
  Eigen::MatrixXd H(m, m);
  for (int k = 0; k < dims.q; ++k)
    for (int l = 0; l <= dims.p; ++l) {
      ThetaParams up = theta, dn = theta;
      up.set(j, k, l, theta(j, k, l) + h);
      dn.set(j, k, l, theta(j, k, l) - h);
      H.col(NodeSubvector::index(k, l, dims.p)) =
          (covising::grad_neg_cond_loglik(up, data, j) -
           covising::grad_neg_cond_loglik(dn, data, j)) /
          (2.0 * h);
    }
  return (H + H.transpose()) / 2.0;
}

inline double tv_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return 0.5 * (a - b).cwiseAbs().sum();
}

}  // namespace testutil
