#include "covising/model.hpp"

#include <bit>
#include <cmath>
#include <string>

namespace covising {

namespace {

void check_node(const ModelDims& dims, int j, const char* who) {
  if (j < 0 || j >= dims.q)
    throw DimensionError(std::string(who) + ": node index out of range");
}

void check_x(const ModelDims& dims, const Eigen::VectorXd& x, const char* who) {
  if (x.size() != dims.p)
    throw DimensionError(std::string(who) + ": x has length " +
                         std::to_string(x.size()) + ", expected p = " +
                         std::to_string(dims.p));
}

void check_y(const ModelDims& dims, const Eigen::VectorXd& y, const char* who) {
  if (y.size() != dims.q)
    throw DimensionError(std::string(who) + ": y has length " +
                         std::to_string(y.size()) + ", expected q = " +
                         std::to_string(dims.q));
}

void check_data(const ModelDims& dims, const Dataset& data, const char* who) {
  if (data.p() != dims.p || data.q() != dims.q)
    throw DimensionError(std::string(who) + ": dataset is " +
                         std::to_string(data.q()) + " nodes x " +
                         std::to_string(data.p()) + " covariates, model wants q = " +
                         std::to_string(dims.q) + ", p = " + std::to_string(dims.p));
}

}  // namespace

std::int64_t num_parameters(ModelDims dims) {
  return static_cast<std::int64_t>(dims.p + 1) * dims.q * (dims.q + 1) / 2;
}

std::int64_t ThetaParams::pair_index(int j, int k) const {
  if (j < 0 || k < 0 || j >= dims_.q || k >= dims_.q)
    throw DimensionError("ThetaParams: node index out of range");
  if (j > k) std::swap(j, k);
  // Pairs (r, r..q-1) for r < j occupy sum_{r<j} (q - r) slots.
  std::int64_t before = static_cast<std::int64_t>(j) * dims_.q - static_cast<std::int64_t>(j) * (j - 1) / 2;
  return before + (k - j);
}

std::int64_t ThetaParams::flat_index(int j, int k, int l) const {
  if (l < 0 || l > dims_.p)
    throw DimensionError("ThetaParams: covariate slot out of range");
  return pair_index(j, k) * (dims_.p + 1) + l;
}

std::array<int, 3> ThetaParams::unflatten(std::int64_t idx) const {
  if (idx < 0 || idx >= size()) throw DimensionError("ThetaParams: flat index out of range");
  int l = static_cast<int>(idx % (dims_.p + 1));
  std::int64_t pair = idx / (dims_.p + 1);
  int j = 0;
  while (pair >= dims_.q - j) {
    pair -= dims_.q - j;
    ++j;
  }
  return {j, j + static_cast<int>(pair), l};
}

bool ThetaParams::is_intercept_index(std::int64_t idx) const {
  auto [j, k, l] = unflatten(idx);
  return j == k && l == 0;
}

std::vector<std::int64_t> ThetaParams::support() const {
  std::vector<std::int64_t> out;
  for (std::int64_t i = 0; i < size(); ++i)
    if (coef_[i] != 0.0) out.push_back(i);
  return out;
}

Dataset::Dataset(Eigen::MatrixXd X_, Eigen::MatrixXd Y_) : X(std::move(X_)), Y(std::move(Y_)) {
  if (Y.rows() < 1) throw DimensionError("Dataset: needs at least one row");
  if (X.rows() != Y.rows())
    throw DimensionError("Dataset: X has " + std::to_string(X.rows()) +
                         " rows, Y has " + std::to_string(Y.rows()));
  if (Y.cols() < 1) throw DimensionError("Dataset: Y needs at least one column");
  if (!X.allFinite()) throw ValueError("Dataset: X contains non-finite entries");
  for (Eigen::Index i = 0; i < Y.rows(); ++i)
    for (Eigen::Index j = 0; j < Y.cols(); ++j) {
      double v = Y(i, j);
      if (v != 0.0 && v != 1.0)
        throw ValueError("Dataset: Y(" + std::to_string(i) + "," + std::to_string(j) +
                         ") = " + std::to_string(v) + " is not 0/1");
    }
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  double e = std::exp(t);
  return e / (1.0 + e);
}

double log1pexp(double t) {
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

double edge_strength(const ThetaParams& theta, const Eigen::VectorXd& x, int j, int k) {
  const ModelDims& d = theta.dims();
  check_node(d, j, "edge_strength");
  check_node(d, k, "edge_strength");
  check_x(d, x, "edge_strength");
  double s = theta(j, k, 0);
  for (int l = 1; l <= d.p; ++l) s += theta(j, k, l) * x[l - 1];
  return s;
}

Eigen::MatrixXd strength_matrix(const ThetaParams& theta, const Eigen::VectorXd& x) {
  const ModelDims& d = theta.dims();
  check_x(d, x, "strength_matrix");
  Eigen::MatrixXd A(d.q, d.q);
  for (int j = 0; j < d.q; ++j)
    for (int k = j; k < d.q; ++k) {
      double s = theta(j, k, 0);
      for (int l = 1; l <= d.p; ++l) s += theta(j, k, l) * x[l - 1];
      A(j, k) = s;
      A(k, j) = s;
    }
  return A;
}

double conditional_logit(const ThetaParams& theta, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& y, int j) {
  const ModelDims& d = theta.dims();
  check_node(d, j, "conditional_logit");
  check_x(d, x, "conditional_logit");
  check_y(d, y, "conditional_logit");
  double eta = edge_strength(theta, x, j, j);
  for (int k = 0; k < d.q; ++k) {
    if (k == j) continue;
    if (y[k] != 0.0) eta += edge_strength(theta, x, j, k) * y[k];
  }
  return eta;
}

double conditional_prob(const ThetaParams& theta, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& y, int j) {
  return sigmoid(conditional_logit(theta, x, y, j));
}

double neg_cond_loglik(const ThetaParams& theta, const Dataset& data, int j) {
  check_data(theta.dims(), data, "neg_cond_loglik");
  const int n = data.n();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    double eta = conditional_logit(theta, data.X.row(i).transpose(), data.Y.row(i).transpose(), j);
    acc += log1pexp(eta) - data.Y(i, j) * eta;
  }
  return acc / n;
}

Eigen::VectorXd grad_neg_cond_loglik(const ThetaParams& theta, const Dataset& data, int j) {
  const ModelDims& d = theta.dims();
  check_data(d, data, "grad_neg_cond_loglik");
  const int n = data.n();
  const int pp1 = d.p + 1;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pp1) * d.q);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd xi = data.X.row(i).transpose();
    Eigen::VectorXd yi = data.Y.row(i).transpose();
    double resid = sigmoid(conditional_logit(theta, xi, yi, j)) - yi[j];
    for (int k = 0; k < d.q; ++k) {
      double yk = (k == j) ? 1.0 : yi[k];
      if (yk == 0.0) continue;
      double* gk = g.data() + static_cast<std::ptrdiff_t>(k) * pp1;
      gk[0] += resid * yk;
      for (int l = 1; l <= d.p; ++l) gk[l] += resid * yk * xi[l - 1];
    }
  }
  return g / n;
}

double pseudo_neg_loglik(const ThetaParams& theta, const Dataset& data) {
  double acc = 0.0;
  for (int j = 0; j < theta.dims().q; ++j) acc += neg_cond_loglik(theta, data, j);
  return acc;
}

Eigen::VectorXd exact_pmf(const ThetaParams& theta, const Eigen::VectorXd& x) {
  const ModelDims& d = theta.dims();
  if (d.q > 20) throw EnumerationLimitError("exact_pmf: q = " + std::to_string(d.q) + " exceeds the q <= 20 enumeration guard");
  check_x(d, x, "exact_pmf");

  const Eigen::MatrixXd A = strength_matrix(theta, x);
  const std::size_t count = std::size_t{1} << d.q;
  Eigen::VectorXd energy(count);
  energy[0] = 0.0;
  // Incremental enumeration: adding node b to `rest` contributes its node
  // term plus its couplings to everything already in `rest`.
  for (std::size_t mask = 1; mask < count; ++mask) {
    int b = std::countr_zero(mask);
    std::size_t rest = mask & (mask - 1);
    double e = energy[rest] + A(b, b);
    for (std::size_t r = rest; r != 0; r &= r - 1) e += A(b, std::countr_zero(r));
    energy[mask] = e;
  }

  double mx = energy.maxCoeff();
  Eigen::VectorXd prob = (energy.array() - mx).exp();
  prob /= prob.sum();
  return prob;
}

NodeSubvector node_subvector(const ThetaParams& theta, int j) {
  const ModelDims& d = theta.dims();
  check_node(d, j, "node_subvector");
  NodeSubvector sub;
  sub.node = j;
  sub.values.resize(static_cast<Eigen::Index>(d.p + 1) * d.q);
  for (int k = 0; k < d.q; ++k)
    for (int l = 0; l <= d.p; ++l)
      sub.values[NodeSubvector::index(k, l, d.p)] = theta(j, k, l);
  return sub;
}

void set_node_subvector(ThetaParams& theta, const NodeSubvector& sub) {
  const ModelDims& d = theta.dims();
  check_node(d, sub.node, "set_node_subvector");
  if (sub.values.size() != static_cast<Eigen::Index>(d.p + 1) * d.q)
    throw DimensionError("set_node_subvector: wrong subvector length");
  for (int k = 0; k < d.q; ++k)
    for (int l = 0; l <= d.p; ++l)
      theta.set(sub.node, k, l, sub.values[NodeSubvector::index(k, l, d.p)]);
}

}  // namespace covising
