#include <doctest.h>

#include <cmath>

#include "covising/fit.hpp"
#include "covising/simulate.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace covising;
using testutil::random_dataset;

TEST_SUITE_BEGIN("fit");

namespace {

Eigen::VectorXd subvector_of(const NodeFit& nf) { return nf.theta.values; }

// model-generated data keeps the fits non-separable at these sizes
Dataset small_model_data(int q, int p, int n, std::uint64_t seed, double beta = 1.5) {
  SimConfig config;
  config.dims = ModelDims(q, p);
  config.n = n;
  config.n_edges = q == 1 ? 0 : q - 1;
  config.rho = 0.7;
  config.beta = beta;
  config.gibbs_sweeps = 60;
  config.seed = seed;
  return simulate_dataset(config).data;
}

}  // namespace

TEST_CASE("soft_threshold") {
  CHECK(soft_threshold(3.0, 1.0) == 2.0);
  CHECK(soft_threshold(-0.5, 1.0) == 0.0);
  CHECK(soft_threshold(-3.0, 1.0) == -2.0);
  CHECK(soft_threshold(0.7, 0.0) == 0.7);
  CHECK_THROWS_AS(soft_threshold(1.0, -0.1), ValueError);
}

TEST_CASE("lambda_max_node: balanced closed form and degenerate response") {
  // alternating response, so the intercept optimum is exactly 0
  const int n = 40, q = 2, p = 1;
  Eigen::MatrixXd X(n, p), Y(n, q);
  Rng rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = normal(rng);
    Y(i, 0) = i % 2;
    Y(i, 1) = (i / 2) % 2;
  }
  Dataset data(X, Y);
  FitConfig raw_cfg;
  raw_cfg.standardize = false;
  double lmax = lambda_max_node(data, 0, raw_cfg);
  // max over penalized coordinates of |(1/n) sum z (0.5 - y)|
  double expect = 0.0;
  for (int k = 0; k < q; ++k)
    for (int l = 0; l <= p; ++l) {
      if (k == 0 && l == 0) continue;
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        double yk = k == 0 ? 1.0 : Y(i, k);
        double xl = l == 0 ? 1.0 : X(i, l - 1);
        acc += xl * yk * (0.5 - Y(i, 0));
      }
      expect = std::max(expect, std::abs(acc / n));
    }
  CHECK(lmax == doctest::Approx(expect).epsilon(1e-10));

  Eigen::MatrixXd Yc = Y;
  Yc.col(1).setOnes();
  Dataset bad(X, Yc);
  CHECK_THROWS_AS(lambda_max_node(bad, 1), DegenerateResponseError);
  CHECK_THROWS_AS(fit_node(bad, 1, 0.1), DegenerateResponseError);
  CHECK_THROWS_AS(fit_joint(bad, 0.1), DegenerateResponseError);
}

TEST_CASE("lambda_max certificate: zero support above, nonzero below") {
  for (int seed = 0; seed < 20; ++seed) {
    Dataset data = small_model_data(3, 2, 120, 900 + seed, 2.0);
    for (FitMode mode : {FitMode::SeparateMax, FitMode::Joint}) {
      double lmax = lambda_max(data, mode);
      FitResult above = mode == FitMode::Joint
                            ? fit_joint(data, 1.01 * lmax)
                            : fit_separate(data, 1.01 * lmax).first;
      std::int64_t active_above = 0, active_below = 0;
      for (std::int64_t c = 0; c < above.theta_hat.size(); ++c)
        if (above.theta_hat.data()[c] != 0.0 && !above.theta_hat.is_intercept_index(c))
          ++active_above;
      FitResult below = mode == FitMode::Joint ? fit_joint(data, 0.5 * lmax)
                                               : fit_separate(data, 0.5 * lmax).first;
      for (std::int64_t c = 0; c < below.theta_hat.size(); ++c)
        if (below.theta_hat.data()[c] != 0.0 && !below.theta_hat.is_intercept_index(c))
          ++active_below;
      CHECK(active_above == 0);
      CHECK(active_below > 0);
    }
  }
}

TEST_CASE("fit_node matches the proximal-gradient oracle to 1e-8") {
  Rng rng(11);
  FitConfig cfg;
  cfg.standardize = false;
  cfg.tol = 1e-8;
  for (int rep = 0; rep < 10; ++rep) {
    int q = 2 + static_cast<int>(rng() % 2);
    int p = 1 + static_cast<int>(rng() % 2);
    Dataset data = small_model_data(q, p, 150, 40 + rep, 1.5);
    int j = static_cast<int>(rng() % q);
    double lmax = lambda_max_node(data, j, cfg);
    for (double frac : {0.5, 0.1}) {
      double lambda = frac * lmax;
      NodeFit fit = fit_node(data, j, lambda, cfg);
      CHECK(fit.converged);
      CHECK(fit.kkt_residual <= 10.0 * cfg.tol);

      oracle::NodeProblem prob{&data, j, lambda};
      double gap = 0.0;
      Eigen::VectorXd ref = oracle::prox_gradient(
          prob, Eigen::VectorXd::Zero(prob.dim()), 200000, 1e-12, &gap);
      CHECK(gap < 1e-9);
      double f_fit = prob.objective(subvector_of(fit));
      double f_ref = prob.objective(ref);
      CHECK(std::abs(f_fit - f_ref) < 1e-8);
      CHECK(fit.objective == doctest::Approx(f_fit).epsilon(1e-10));
    }
  }
}

TEST_CASE("fit_joint matches the oracle and is exactly symmetric") {
  Rng rng(13);
  FitConfig cfg;
  cfg.standardize = false;
  cfg.tol = 1e-8;
  for (int rep = 0; rep < 6; ++rep) {
    Dataset data = small_model_data(3, 1, 200, 80 + rep, 1.5);
    double lmax = lambda_max(data, FitMode::Joint, cfg);
    double lambda = (rep % 2 == 0 ? 0.5 : 0.1) * lmax;
    FitResult fit = fit_joint(data, lambda, cfg);
    CHECK(fit.converged);
    CHECK(fit.kkt_residual <= 10.0 * cfg.tol);
    for (int j = 0; j < data.q(); ++j)
      for (int k = 0; k < data.q(); ++k)
        for (int l = 0; l <= data.p(); ++l)
          CHECK(fit.theta_hat(j, k, l) == fit.theta_hat(k, j, l));

    oracle::JointProblem prob(&data, lambda);
    double gap = 0.0;
    Eigen::VectorXd ref = oracle::prox_gradient(
        prob, Eigen::VectorXd::Zero(prob.dim()), 200000, 1e-12, &gap);
    CHECK(gap < 1e-9);
    Eigen::VectorXd v(prob.dim());
    for (int c = 0; c < prob.dim(); ++c) v[c] = fit.theta_hat.data()[c];
    CHECK(std::abs(prob.objective(v) - prob.objective(ref)) < 1e-8);
  }
}

TEST_CASE("symmetrization rules follow the magnitude indicators") {
  ModelDims dims(2, 1);
  NodeEstimates raws(2);
  for (int j = 0; j < 2; ++j) {
    raws[j].theta.node = j;
    raws[j].theta.values = Eigen::VectorXd::Zero(4);
  }
  // raw estimate of pair (0,1) slot l=1: 0.5 from node 0, -0.9 from node 1
  raws[0].theta.values[NodeSubvector::index(1, 1, 1)] = 0.5;
  raws[1].theta.values[NodeSubvector::index(0, 1, 1)] = -0.9;
  ThetaParams mx = symmetrize_estimates(raws, SymmetrizeRule::SeparateMax, dims);
  ThetaParams mn = symmetrize_estimates(raws, SymmetrizeRule::SeparateMin, dims);
  CHECK(mx(0, 1, 1) == -0.9);
  CHECK(mn(0, 1, 1) == 0.5);
  CHECK(mx(0, 1, 0) == 0.0);  // both raws zero
  CHECK(mn(0, 1, 0) == 0.0);

  // exact-magnitude tie keeps the smaller node index's value
  raws[0].theta.values[NodeSubvector::index(1, 0, 1)] = 0.7;
  raws[1].theta.values[NodeSubvector::index(0, 0, 1)] = -0.7;
  mx = symmetrize_estimates(raws, SymmetrizeRule::SeparateMax, dims);
  mn = symmetrize_estimates(raws, SymmetrizeRule::SeparateMin, dims);
  CHECK(mx(0, 1, 0) == 0.7);
  CHECK(mn(0, 1, 0) == 0.7);
}

TEST_CASE("separate-min support is contained in separate-max support") {
  for (int seed = 0; seed < 20; ++seed) {
    Dataset data = small_model_data(4, 2, 100, 300 + seed, 2.0);
    double lambda = 0.3 * lambda_max(data, FitMode::SeparateMax);
    FitConfig cmax, cmin;
    cmin.symmetrize = SymmetrizeRule::SeparateMin;
    ThetaParams tmax = fit_separate(data, lambda, cmax).first.theta_hat;
    ThetaParams tmin = fit_separate(data, lambda, cmin).first.theta_hat;
    for (std::int64_t c = 0; c < tmax.size(); ++c)
      if (tmin.data()[c] != 0.0) CHECK(tmax.data()[c] != 0.0);
  }
}

TEST_CASE("objective decreases monotonically across passes") {
  for (int seed = 0; seed < 5; ++seed) {
    Dataset data = small_model_data(3, 2, 150, 500 + seed, 2.5);
    FitConfig cfg;
    cfg.track_objective = true;
    NodeFit nf = fit_node(data, 0, 0.05 * lambda_max_node(data, 0, cfg), cfg);
    REQUIRE(nf.objective_history.size() > 1);
    for (std::size_t t = 1; t < nf.objective_history.size(); ++t)
      CHECK(nf.objective_history[t] <= nf.objective_history[t - 1] + 1e-12);

    FitResult jf = fit_joint(data, 0.05 * lambda_max(data, FitMode::Joint, cfg), cfg);
    REQUIRE(jf.objective_history.size() > 1);
    for (std::size_t t = 1; t < jf.objective_history.size(); ++t)
      CHECK(jf.objective_history[t] <= jf.objective_history[t - 1] + 1e-12);
  }
}

TEST_CASE("zero-lambda fit reaches the unpenalized optimum") {
  Dataset data = small_model_data(2, 1, 400, 77, 1.0);
  FitConfig cfg;
  cfg.standardize = false;
  for (int j = 0; j < data.q(); ++j) {
    NodeFit nf = fit_node(data, j, 0.0, cfg);
    CHECK(nf.converged);
    ThetaParams theta(data.dims());
    set_node_subvector(theta, nf.theta);
    CHECK(grad_neg_cond_loglik(theta, data, j).norm() < 1e-5);
  }

  // driven harder, the gradient at the optimum goes below 1e-6
  FitConfig tight = cfg;
  tight.tol = 1e-8;
  NodeFit nf = fit_node(data, 0, 0.0, tight);
  REQUIRE(nf.converged);
  ThetaParams theta(data.dims());
  set_node_subvector(theta, nf.theta);
  CHECK(grad_neg_cond_loglik(theta, data, 0).norm() < 1e-6);
}

TEST_CASE("fit_path: endpoints, warm-start equivalence, support growth") {
  Dataset data = small_model_data(4, 2, 150, 600, 2.0);
  for (FitMode mode : {FitMode::SeparateMax, FitMode::Joint}) {
    double lmax = lambda_max(data, mode);
    std::vector<double> grid = lambda_grid(lmax, 25, 0.01);
    std::vector<FitResult> path = fit_path(data, grid, mode);

    std::int64_t first_active = 0;
    for (std::int64_t c = 0; c < path[0].theta_hat.size(); ++c)
      if (path[0].theta_hat.data()[c] != 0.0 && !path[0].theta_hat.is_intercept_index(c))
        ++first_active;
    CHECK(first_active == 0);

    // warm-started results equal cold fits
    for (int i : {5, 12, 24}) {
      FitResult cold = mode == FitMode::Joint ? fit_joint(data, grid[i])
                                              : fit_separate(data, grid[i]).first;
      CHECK(std::abs(path[i].objective - cold.objective) < 1e-6);
    }

    int grow = 0;
    for (std::size_t i = 1; i < path.size(); ++i) {
      auto active = [](const FitResult& r) {
        std::int64_t count = 0;
        for (std::int64_t c = 0; c < r.theta_hat.size(); ++c)
          if (r.theta_hat.data()[c] != 0.0 && !r.theta_hat.is_intercept_index(c)) ++count;
        return count;
      };
      if (active(path[i]) >= active(path[i - 1])) ++grow;
    }
    CHECK(grow >= static_cast<int>(0.9 * (path.size() - 1)));
  }

  CHECK_THROWS_AS(fit_path(data, {0.1, 0.2}, FitMode::Joint), ValueError);
  CHECK_THROWS_AS(fit_path(data, {}, FitMode::Joint), ValueError);
}

TEST_CASE("kkt_residual: certificate at optima, zero at lambda_max, perturbation") {
  Dataset data = small_model_data(3, 2, 150, 800, 2.0);
  FitConfig cfg;
  double lmax = lambda_max(data, FitMode::Joint, cfg);
  double lambda = 0.3 * lmax;
  FitResult fit = fit_joint(data, lambda, cfg);
  REQUIRE(fit.converged);
  CHECK(kkt_residual(fit.theta_hat, data, lambda, FitMode::Joint, cfg) <= 10.0 * cfg.tol);

  ThetaParams zero(data.dims());
  double viol = kkt_residual(zero, data, 1.05 * lmax, FitMode::Joint, cfg);
  // intercept residual may be nonzero at theta = 0; penalized coordinates
  // contribute nothing above lambda_max
  ThetaParams intercepts(data.dims());
  for (int j = 0; j < data.q(); ++j)
    intercepts.set(j, j, 0, std::log(data.Y.col(j).mean() / (1.0 - data.Y.col(j).mean())));
  CHECK(kkt_residual(intercepts, data, 1.05 * lmax, FitMode::Joint, cfg) <= 1e-12);
  CHECK(viol >= 0.0);

  ThetaParams bumped = fit.theta_hat;
  for (std::int64_t c = 0; c < bumped.size(); ++c)
    if (bumped.data()[c] != 0.0 && !bumped.is_intercept_index(c)) {
      bumped.data()[c] += 0.1;
      break;
    }
  CHECK(kkt_residual(bumped, data, lambda, FitMode::Joint, cfg) >= 0.01);

  // separate mode evaluates each node's raw problem
  auto [sep, raws] = fit_separate(data, lambda, cfg);
  REQUIRE(sep.converged);
  CHECK(sep.kkt_residual <= 10.0 * cfg.tol);
  ThetaParams raw_as_theta(data.dims());  // node 0's view for a single-node check
  for (const NodeFit& nf : raws) CHECK(nf.kkt_residual <= 10.0 * cfg.tol);
  (void)raw_as_theta;
}

TEST_CASE("standardization round-trip preserves the conditional logit") {
  Rng rng(19);
  Dataset data = small_model_data(3, 3, 120, 901, 2.0);
  // make the covariate scales wildly uneven
  Eigen::MatrixXd X = data.X;
  X.col(0) *= 40.0;
  X.col(2) *= 0.01;
  Dataset scaled(X, data.Y);

  FitConfig cfg;  // standardize on
  double lambda = 0.2 * lambda_max(scaled, FitMode::SeparateMax, cfg);
  auto [fit, raws] = fit_separate(scaled, lambda, cfg);
  (void)raws;

  // reconstruct the internal (scaled-problem) coefficients: theta_int = theta * sigma_l
  const int n = scaled.n();
  Eigen::VectorXd sigma(scaled.p());
  for (int l = 0; l < scaled.p(); ++l) {
    double mean = scaled.X.col(l).mean();
    sigma[l] = std::sqrt((scaled.X.col(l).array() - mean).square().sum() / n);
  }
  ThetaParams internal = fit.theta_hat;
  for (std::int64_t c = 0; c < internal.size(); ++c) {
    auto [j, k, l] = internal.unflatten(c);
    (void)j;
    (void)k;
    if (l >= 1) internal.data()[c] *= sigma[l - 1];
  }
  for (int rep = 0; rep < 20; ++rep) {
    int i = static_cast<int>(rng() % n);
    Eigen::VectorXd xraw = scaled.X.row(i).transpose();
    Eigen::VectorXd xs = xraw.cwiseQuotient(sigma);
    Eigen::VectorXd y = scaled.Y.row(i).transpose();
    for (int j = 0; j < scaled.q(); ++j)
      CHECK(conditional_logit(fit.theta_hat, xraw, y, j) ==
            doctest::Approx(conditional_logit(internal, xs, y, j)).epsilon(1e-10));
  }

  // exact zeros survive the back-transform
  std::int64_t zeros = 0;
  for (std::int64_t c = 0; c < fit.theta_hat.size(); ++c)
    if (fit.theta_hat.data()[c] == 0.0) ++zeros;
  CHECK(zeros > 0);
}

TEST_CASE("warm start from an exported solution reproduces the objective") {
  Dataset data = small_model_data(3, 2, 150, 902, 2.0);
  double lambda = 0.25 * lambda_max(data, FitMode::Joint);
  FitResult first = fit_joint(data, lambda);
  FitResult again = fit_joint(data, lambda, {}, &first.theta_hat);
  CHECK(std::abs(first.objective - again.objective) < 1e-10);

  auto [sep_first, r1] = fit_separate(data, lambda);
  auto [sep_again, r2] = fit_separate(data, lambda, {}, &sep_first.theta_hat);
  (void)r1;
  (void)r2;
  CHECK(std::abs(sep_first.objective - sep_again.objective) < 1e-8);
}

TEST_CASE("non-convergence is flagged, not thrown") {
  Dataset data = small_model_data(3, 2, 150, 903, 2.0);
  FitConfig cfg;
  cfg.max_passes = 1;
  NodeFit nf = fit_node(data, 0, 0.01 * lambda_max_node(data, 0, cfg), cfg);
  CHECK_FALSE(nf.converged);
  CHECK(nf.passes == 1);
}

TEST_CASE("fit_path_tolerant records skipped degenerate nodes as all-zero") {
  Dataset base = small_model_data(3, 1, 60, 904, 1.0);
  Eigen::MatrixXd Y = base.Y;
  Y.col(1).setZero();  // constant response
  Dataset data(base.X, Y);
  std::vector<double> grid = {0.4, 0.2, 0.1};

  int skipped = -1;
  std::vector<FitResult> path =
      fit_path_tolerant(data, grid, FitMode::SeparateMax, {}, &skipped);
  CHECK(skipped == 1);
  for (const FitResult& r : path)
    for (int l = 0; l <= data.p(); ++l) CHECK(r.theta_hat(1, 1, l) == 0.0);

  int skipped_joint = -1;
  std::vector<FitResult> jpath =
      fit_path_tolerant(data, grid, FitMode::Joint, {}, &skipped_joint);
  CHECK(skipped_joint == 1);
  CHECK(jpath.size() == grid.size());

  CHECK_THROWS_AS(fit_path(data, grid, FitMode::SeparateMax), DegenerateResponseError);
}

TEST_CASE("covariate-free datasets fit through both estimators") {
  // p = 0: features are the other responses plus the intercept
  ThetaParams star(ModelDims(3, 0));
  star.set(0, 1, 0, 2.0);
  star.set(0, 0, 0, -1.0);
  star.set(1, 1, 0, -1.0);
  Rng rng(71);
  Eigen::MatrixXd X(Eigen::MatrixXd::Zero(250, 0));
  Dataset data = sample_dataset(star, X, 80, 771);

  double lmax = lambda_max(data, FitMode::SeparateMax);
  auto [sep, raws] = fit_separate(data, 0.2 * lmax);
  (void)raws;
  CHECK(sep.converged);
  CHECK(sep.kkt_residual <= 1e-5);

  FitResult joint = fit_joint(data, 0.2 * lambda_max(data, FitMode::Joint));
  CHECK(joint.converged);
  // the planted coupling survives at moderate penalty
  CHECK(sep.theta_hat(0, 1, 0) != 0.0);
  CHECK(joint.theta_hat(0, 1, 0) != 0.0);

  std::vector<FitResult> path = fit_path(data, lambda_grid(lmax, 10, 0.05),
                                         FitMode::SeparateMax);
  CHECK(path.size() == 10);
}

TEST_CASE("lambda_grid shape") {
  std::vector<double> g = lambda_grid(2.0, 50, 0.01);
  CHECK(g.size() == 50);
  CHECK(g.front() == 2.0);
  CHECK(g.back() == doctest::Approx(0.02).epsilon(1e-12));
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] < g[i - 1]);
  CHECK(lambda_grid(1.0, 1, 0.5).size() == 1);
  CHECK_THROWS_AS(lambda_grid(0.0, 10, 0.1), ValueError);
}

TEST_SUITE_END();
