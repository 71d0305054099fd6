#include "covising/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "covising/parallel.hpp"
#include "covising/simulate.hpp"

namespace covising {

namespace {

void accumulate_outer(const Eigen::VectorXd& z, double w, Eigen::MatrixXd& I_sum,
                      Eigen::MatrixXd& U_sum, Eigen::MatrixXd& I_sq, Eigen::MatrixXd& U_sq) {
  Eigen::MatrixXd zz = z * z.transpose();
  U_sum += zz;
  U_sq += zz.cwiseProduct(zz);
  zz *= w;
  I_sum += zz;
  I_sq += zz.cwiseProduct(zz);
}

double max_se(const Eigen::MatrixXd& sum, const Eigen::MatrixXd& sq, int n) {
  // entrywise sqrt(var/n) from first and second moments
  Eigen::MatrixXd mean = sum / n;
  Eigen::MatrixXd var = (sq / n - mean.cwiseProduct(mean)).cwiseMax(0.0);
  return std::sqrt(var.maxCoeff() / n);
}

// Draw one outcome index from an enumerated pmf.
int sample_pmf(const Eigen::VectorXd& pmf, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  double acc = 0.0;
  for (int mask = 0; mask < pmf.size(); ++mask) {
    acc += pmf[mask];
    if (u < acc) return mask;
  }
  return static_cast<int>(pmf.size()) - 1;
}

}  // namespace

Eigen::VectorXd feature_vector(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int j,
                               ModelDims dims) {
  if (x.size() != dims.p) throw DimensionError("feature_vector: x has wrong length");
  if (y.size() != dims.q) throw DimensionError("feature_vector: y has wrong length");
  if (j < 0 || j >= dims.q) throw DimensionError("feature_vector: node out of range");
  Eigen::VectorXd z(static_cast<Eigen::Index>(dims.p + 1) * dims.q);
  for (int k = 0; k < dims.q; ++k) {
    double yk = (k == j) ? 1.0 : y[k];
    z[NodeSubvector::index(k, 0, dims.p)] = yk;
    for (int l = 1; l <= dims.p; ++l)
      z[NodeSubvector::index(k, l, dims.p)] = yk * x[l - 1];
  }
  return z;
}

InfoMatrices empirical_info(const Dataset& data, const ThetaParams& theta, int j) {
  if (theta.dims() != data.dims())
    throw DimensionError("empirical_info: theta and dataset dims disagree");
  const ModelDims dims = theta.dims();
  const int m = (dims.p + 1) * dims.q;
  const int n = data.n();

  InfoMatrices out;
  out.node = j;
  out.dims = dims;
  out.source = InfoSource::Empirical;
  out.n_draws = n;
  out.I = Eigen::MatrixXd::Zero(m, m);
  out.U = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd xi = data.X.row(i).transpose();
    Eigen::VectorXd yi = data.Y.row(i).transpose();
    Eigen::VectorXd z = feature_vector(xi, yi, j, dims);
    double pj = conditional_prob(theta, xi, yi, j);
    Eigen::MatrixXd zz = z * z.transpose();
    out.U += zz;
    out.I += pj * (1.0 - pj) * zz;
  }
  out.I /= n;
  out.U /= n;
  return out;
}

CovariateSampler standard_normal_sampler(int p) {
  return [p](Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd x(p);
    for (int l = 0; l < p; ++l) x[l] = normal(rng);
    return x;
  };
}

InfoMatrices population_info_mc(const ThetaParams& theta_star, const CovariateSampler& sample_x,
                                int j, int n_mc, Rng& rng, int gibbs_sweeps, int threads) {
  if (n_mc < 2) throw ValueError("population_info_mc: n_mc must be >= 2");
  const ModelDims dims = theta_star.dims();
  if (j < 0 || j >= dims.q) throw DimensionError("population_info_mc: node out of range");
  const int m = (dims.p + 1) * dims.q;
  const bool enumerate = dims.q <= 12;

  // fixed chunk layout keeps the result independent of the thread count
  const int chunks = std::min(64, n_mc);
  const std::uint64_t base = rng();
  struct Block {
    Eigen::MatrixXd I_sum, U_sum, I_sq, U_sq;
  };
  std::vector<Block> blocks(chunks);

  parallel_for(static_cast<std::size_t>(chunks), threads, [&](std::size_t c) {
    Block& b = blocks[c];
    b.I_sum = Eigen::MatrixXd::Zero(m, m);
    b.U_sum = Eigen::MatrixXd::Zero(m, m);
    b.I_sq = Eigen::MatrixXd::Zero(m, m);
    b.U_sq = Eigen::MatrixXd::Zero(m, m);
    int count = n_mc / chunks + (static_cast<int>(c) < n_mc % chunks ? 1 : 0);
    Rng chunk_rng = substream(base, c);
    for (int t = 0; t < count; ++t) {
      Eigen::VectorXd x = sample_x(chunk_rng);
      if (x.size() != dims.p)
        throw DimensionError("population_info_mc: sampler emits wrong length");
      Eigen::VectorXd y(dims.q);
      if (enumerate) {
        int mask = sample_pmf(exact_pmf(theta_star, x), chunk_rng);
        for (int k = 0; k < dims.q; ++k) y[k] = (mask >> k) & 1;
      } else {
        y = gibbs_sample(theta_star, x, gibbs_sweeps, chunk_rng);
      }
      double pj = conditional_prob(theta_star, x, y, j);
      accumulate_outer(feature_vector(x, y, j, dims), pj * (1.0 - pj), b.I_sum, b.U_sum, b.I_sq,
                       b.U_sq);
    }
  });

  Eigen::MatrixXd I_sum = Eigen::MatrixXd::Zero(m, m), U_sum = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd I_sq = Eigen::MatrixXd::Zero(m, m), U_sq = Eigen::MatrixXd::Zero(m, m);
  for (const Block& b : blocks) {
    I_sum += b.I_sum;
    U_sum += b.U_sum;
    I_sq += b.I_sq;
    U_sq += b.U_sq;
  }

  InfoMatrices out;
  out.node = j;
  out.dims = dims;
  out.source = InfoSource::PopulationMC;
  out.n_draws = n_mc;
  out.se_max_I = max_se(I_sum, I_sq, n_mc);
  out.se_max_U = max_se(U_sum, U_sq, n_mc);
  out.I = I_sum / n_mc;
  out.U = U_sum / n_mc;
  return out;
}

std::vector<int> node_support(const ThetaParams& theta, int j) {
  const ModelDims dims = theta.dims();
  std::vector<int> support;
  for (int k = 0; k < dims.q; ++k)
    for (int l = 0; l <= dims.p; ++l) {
      if (k == j && l == 0) continue;  // intercept is outside the analysis
      if (theta(j, k, l) != 0.0) support.push_back(NodeSubvector::index(k, l, dims.p));
    }
  return support;
}

namespace {

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& A, const std::vector<int>& rows,
                          const std::vector<int>& cols) {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = A(rows[i], cols[j]);
  return out;
}

}  // namespace

AssumptionCheck check_assumptions(const InfoMatrices& info, const std::vector<int>& support) {
  const int m = static_cast<int>(info.I.rows());
  if (info.I.cols() != m || info.U.rows() != m || info.U.cols() != m)
    throw DimensionError("check_assumptions: matrices must be square and equal-sized");
  if (m != (info.dims.p + 1) * info.dims.q)
    throw DimensionError("check_assumptions: matrix size disagrees with dims");
  const int intercept = NodeSubvector::index(info.node, 0, info.dims.p);

  AssumptionCheck out;
  out.node = info.node;
  out.support = support;
  std::sort(out.support.begin(), out.support.end());

  std::vector<char> in_support(m, 0);
  for (int s : out.support) {
    if (s < 0 || s >= m) throw DimensionError("check_assumptions: support index out of range");
    if (s == intercept)
      throw ValueError("check_assumptions: the intercept slot is outside the analysis");
    in_support[s] = 1;
  }
  std::vector<int> complement, analysis;
  for (int c = 0; c < m; ++c) {
    if (c == intercept) continue;  // the theory drops the intercept coordinate
    analysis.push_back(c);
    if (!in_support[c]) complement.push_back(c);
  }

  if (!analysis.empty()) {
    Eigen::MatrixXd U_a = submatrix(info.U, analysis, analysis);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esU(U_a, Eigen::EigenvaluesOnly);
    out.delta_max = esU.eigenvalues().maxCoeff();
  }

  if (out.support.empty()) {
    // Vacuous A1/A2: nothing to recover for this node.
    out.invertible = true;
    out.incoherence = 0.0;
    out.alpha_slack = 1.0;
    out.delta_min = std::numeric_limits<double>::infinity();
    return out;
  }

  Eigen::MatrixXd I_SS = submatrix(info.I, out.support, out.support);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(I_SS, Eigen::EigenvaluesOnly);
  out.delta_min = es.eigenvalues().minCoeff();
  double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  out.invertible = out.delta_min > 1e-12 * scale;

  if (!out.invertible) {
    out.incoherence = std::numeric_limits<double>::quiet_NaN();
    out.alpha_slack = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  if (complement.empty()) {
    out.incoherence = 0.0;  // vacuous: no irrelevant coordinates
    out.alpha_slack = 1.0;
    return out;
  }
  // B = I_{S^c S} I_SS^{-1}; with symmetric I, B^T = I_SS^{-1} I_{S S^c},
  // so the inf-norm of B is the max column absolute sum of the solve result.
  Eigen::MatrixXd X = I_SS.ldlt().solve(submatrix(info.I, out.support, complement));
  out.incoherence = X.cwiseAbs().colwise().sum().maxCoeff();
  out.alpha_slack = 1.0 - out.incoherence;
  return out;
}

TheoremCheck theorem_conditions(const TheoremInputs& in) {
  if (in.lambda_n < 0 || in.n <= 0 || in.M_n <= 0 || in.d < 0 || in.C <= 0 || in.delta <= 0)
    throw ValueError("theorem_conditions: inputs must be positive (d may be 0)");
  TheoremCheck out;
  double logpq = std::log(std::max(in.p, 1.0)) + std::log(std::max(in.q, 1.0));
  out.cond_M = in.M_n >= std::pow(in.C * in.lambda_n * in.lambda_n * in.n, 1.0 / (1.0 + in.delta));
  out.cond_lambda = in.lambda_n >= in.C * in.M_n * std::sqrt(logpq / in.n);
  out.cond_n = in.n >= in.C * in.M_n * in.M_n * in.d * in.d * in.d * logpq;
  out.l2_bound = 5.0 * in.lambda_n * std::sqrt(in.d) / in.delta_min;
  out.sign_threshold = 10.0 * in.lambda_n * std::sqrt(in.d) / in.delta_min;
  return out;
}

}  // namespace covising
