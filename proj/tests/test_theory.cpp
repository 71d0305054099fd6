#include <doctest.h>

#include <cmath>

#include "covising/simulate.hpp"
#include "covising/theory.hpp"
#include "test_util.hpp"

using namespace covising;

TEST_SUITE_BEGIN("theory");

TEST_CASE("feature_vector layout and the logit inner-product identity") {
  ModelDims dims(3, 2);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(2), y = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd z = feature_vector(x, y, 1, dims);
  REQUIRE(z.size() == 9);
  for (int i = 0; i < z.size(); ++i)
    CHECK(z[i] == (i == NodeSubvector::index(1, 0, 2) ? 1.0 : 0.0));

  // p=0, q=2, j=0, y_2=1 -> both slots 1
  ModelDims d2(2, 0);
  Eigen::VectorXd x0(0), y2(2);
  y2 << 0, 1;
  Eigen::VectorXd z2 = feature_vector(x0, y2, 0, d2);
  CHECK(z2[0] == 1.0);
  CHECK(z2[1] == 1.0);

  Rng rng(3);
  for (int rep = 0; rep < 30; ++rep) {
    ThetaParams theta = testutil::random_theta(dims, 1.5, rng);
    Eigen::VectorXd rx = testutil::random_x(2, rng);
    Eigen::VectorXd ry = testutil::random_y(3, rng);
    for (int j = 0; j < 3; ++j) {
      Eigen::VectorXd zf = feature_vector(rx, ry, j, dims);
      Eigen::VectorXd sub = node_subvector(theta, j).values;
      CHECK(zf.dot(sub) ==
            doctest::Approx(conditional_logit(theta, rx, ry, j)).epsilon(1e-12));
    }
  }
}

TEST_CASE("empirical_info equals the finite-difference Hessian") {
  Rng rng(5);
  for (int rep = 0; rep < 8; ++rep) {
    int q = 2 + static_cast<int>(rng() % 2);
    int p = 1 + static_cast<int>(rng() % 2);
    ModelDims dims(q, p);
    Dataset data = testutil::random_dataset(30, dims, rng);
    ThetaParams theta = testutil::random_theta(dims, 1.0, rng);
    int j = static_cast<int>(rng() % q);
    InfoMatrices info = empirical_info(data, theta, j);
    Eigen::MatrixXd fd = testutil::fd_hessian(theta, data, j);
    CHECK((info.I - fd).cwiseAbs().maxCoeff() < 1e-4);
    CHECK(info.source == InfoSource::Empirical);
  }
}

TEST_CASE("empirical_info structure: constant slot, saturation, PSD") {
  Rng rng(7);
  ModelDims dims(3, 2);
  Dataset data = testutil::random_dataset(40, dims, rng);
  ThetaParams theta = testutil::random_theta(dims, 1.0, rng);
  InfoMatrices info = empirical_info(data, theta, 1);

  int idx = NodeSubvector::index(1, 0, dims.p);
  CHECK(info.U(idx, idx) == 1.0);  // constant feature

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esI(info.I, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esU(info.U, Eigen::EigenvaluesOnly);
  CHECK(esI.eigenvalues().minCoeff() >= -1e-8);
  CHECK(esU.eigenvalues().minCoeff() >= -1e-8);

  // saturated node: huge intercept drives all weights to ~0
  ThetaParams sat(dims);
  sat.set(1, 1, 0, 60.0);
  InfoMatrices flat = empirical_info(data, sat, 1);
  CHECK(flat.I.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("population_info_mc at theta=0, p=0 matches the independence closed form") {
  ModelDims dims(3, 0);
  ThetaParams zero(dims);
  Rng rng(11);
  InfoMatrices info = population_info_mc(zero, standard_normal_sampler(0), 0, 40000, rng);
  CHECK(info.source == InfoSource::PopulationMC);
  CHECK(info.se_max_I > 0.0);

  // z = (1, y_2, y_3) under fair coins; I = E[1/4 z z^T]
  Eigen::MatrixXd expect(3, 3);
  expect << 0.25, 0.125, 0.125, 0.125, 0.125, 0.0625, 0.125, 0.0625, 0.125;
  CHECK((info.I - expect).cwiseAbs().maxCoeff() < 3.0 * info.se_max_I + 1e-9);

  Eigen::MatrixXd expectU(3, 3);
  expectU << 1.0, 0.5, 0.5, 0.5, 0.5, 0.25, 0.5, 0.25, 0.5;
  CHECK((info.U - expectU).cwiseAbs().maxCoeff() < 3.0 * info.se_max_U + 1e-9);
}

TEST_CASE("population_info_mc is invariant to the thread count") {
  ModelDims dims(3, 1);
  Rng trng(17);
  ThetaParams theta = testutil::random_theta(dims, 1.0, trng);
  Rng r1(303), r4(303);
  InfoMatrices a = population_info_mc(theta, standard_normal_sampler(1), 1, 5000, r1, 500, 1);
  InfoMatrices b = population_info_mc(theta, standard_normal_sampler(1), 1, 5000, r4, 500, 4);
  CHECK((a.I - b.I).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.U - b.U).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.se_max_I == b.se_max_I);
}

TEST_CASE("population_info_mc falls back to Gibbs above the enumeration cutoff") {
  ModelDims dims(13, 0);  // q > 12 takes the sampling path
  Rng trng(19);
  ThetaParams theta = testutil::random_theta(dims, 0.3, trng, 0.2);
  Rng rng(7);
  InfoMatrices info = population_info_mc(theta, standard_normal_sampler(0), 0, 300, rng, 40);
  CHECK(info.n_draws == 300);
  CHECK(info.I.allFinite());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info.I, Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues().minCoeff() >= -1e-8);
  int idx = NodeSubvector::index(0, 0, 0);
  CHECK(info.U(idx, idx) == 1.0);
}

TEST_CASE("doubling the MC budget shrinks the standard error about sqrt(2)") {
  ModelDims dims(3, 1);
  Rng rng(13);
  ThetaParams theta = testutil::random_theta(dims, 1.0, rng);
  Rng r1(101), r2(101);
  InfoMatrices a = population_info_mc(theta, standard_normal_sampler(1), 0, 20000, r1);
  InfoMatrices b = population_info_mc(theta, standard_normal_sampler(1), 0, 40000, r2);
  CHECK(b.se_max_I < a.se_max_I);
  CHECK(b.se_max_I > 0.4 * a.se_max_I);
}

TEST_CASE("empirical information converges to the enumerated population matrix") {
  // p = 0 lets the population expectation be computed exactly from the pmf
  int improved = 0;
  for (int rep = 0; rep < 20; ++rep) {
    ModelDims dims(3, 0);
    Rng rng(500 + rep);
    ThetaParams theta = testutil::random_theta(dims, 1.0, rng);
    Eigen::VectorXd x(0);
    Eigen::VectorXd pmf = exact_pmf(theta, x);

    const int m = dims.q;
    Eigen::MatrixXd Istar = Eigen::MatrixXd::Zero(m, m);
    for (int mask = 0; mask < 8; ++mask) {
      Eigen::VectorXd y(3);
      for (int k = 0; k < 3; ++k) y[k] = (mask >> k) & 1;
      Eigen::VectorXd z = feature_vector(x, y, 0, dims);
      double pj = conditional_prob(theta, x, y, 0);
      Istar += pmf[mask] * pj * (1.0 - pj) * z * z.transpose();
    }

    Eigen::MatrixXd X_small(1000, 0), X_big(100000, 0);
    Dataset small = sample_dataset(theta, X_small, 60, 900 + rep);
    Dataset big = sample_dataset(theta, X_big, 60, 901 + rep);
    double err_small = (empirical_info(small, theta, 0).I - Istar).cwiseAbs().maxCoeff();
    double err_big = (empirical_info(big, theta, 0).I - Istar).cwiseAbs().maxCoeff();
    if (err_big < err_small) ++improved;
  }
  CHECK(improved >= 18);  // 90% of instances
}

TEST_CASE("check_assumptions: block-diagonal, vacuous, and hand-computed cases") {
  ModelDims dims(3, 0);  // analysis space has two coordinates for node 0
  InfoMatrices info;
  info.node = 0;
  info.dims = dims;

  // block diagonal across support {idx(1)} vs complement {idx(2)}
  info.I = Eigen::MatrixXd::Zero(3, 3);
  info.I(0, 0) = 0.25;
  info.I(1, 1) = 0.2;
  info.I(2, 2) = 0.1;
  info.U = Eigen::MatrixXd::Identity(3, 3);
  std::vector<int> support = {1};
  AssumptionCheck c = check_assumptions(info, support);
  CHECK(c.incoherence == 0.0);
  CHECK(c.alpha_slack == 1.0);
  CHECK(c.delta_min == doctest::Approx(0.2));
  CHECK(c.delta_max == doctest::Approx(1.0));
  CHECK(c.invertible);

  // support = all analysis coordinates -> empty complement, vacuous norm
  AssumptionCheck all = check_assumptions(info, {1, 2});
  CHECK(all.incoherence == 0.0);
  CHECK(all.alpha_slack == 1.0);

  // empty support is vacuous
  AssumptionCheck none = check_assumptions(info, {});
  CHECK(none.alpha_slack == 1.0);
  CHECK(std::isinf(none.delta_min));

  // hand-built 3x3 with a nontrivial off-diagonal block: S = {1}, Sc = {2}
  // incoherence = |I_21| / I_11 over the analysis coordinates
  info.I << 0.25, 0.00, 0.00,
            0.00, 0.50, 0.30,
            0.00, 0.30, 0.40;
  AssumptionCheck hand = check_assumptions(info, {1});
  CHECK(hand.incoherence == doctest::Approx(0.3 / 0.5).epsilon(1e-12));
  CHECK(hand.alpha_slack == doctest::Approx(1.0 - 0.6).epsilon(1e-12));
  CHECK(hand.delta_min == doctest::Approx(0.5).epsilon(1e-12));

  // singular I_SS is reported, not thrown
  info.I(1, 1) = 0.0;
  info.I(1, 2) = 0.0;
  info.I(2, 1) = 0.0;
  AssumptionCheck sing = check_assumptions(info, {1});
  CHECK_FALSE(sing.invertible);
  CHECK(std::isnan(sing.incoherence));

  // intercept slot may not appear in the support
  CHECK_THROWS_AS(check_assumptions(info, {0}), ValueError);
}

TEST_CASE("node_support excludes the intercept and matches nonzeros") {
  ModelDims dims(3, 1);
  ThetaParams theta(dims);
  theta.set(0, 0, 0, 1.0);   // intercept: never in the support
  theta.set(0, 0, 1, -2.0);  // own main effect
  theta.set(0, 2, 0, 0.5);   // edge to node 2
  std::vector<int> s = node_support(theta, 0);
  std::vector<int> expect = {NodeSubvector::index(0, 1, 1), NodeSubvector::index(2, 0, 1)};
  CHECK(s == expect);
}

TEST_CASE("theorem_conditions: boundaries, empty support, cubic growth") {
  TheoremInputs in;
  in.n = 1000;
  in.p = 10;
  in.q = 10;
  in.C = 1.0;
  in.delta = 1.0;
  in.M_n = 3.0;
  in.d = 4.0;
  in.delta_min = 0.5;

  double logpq = std::log(10.0) + std::log(10.0);
  in.lambda_n = in.C * in.M_n * std::sqrt(logpq / in.n);  // exactly at the boundary
  TheoremCheck at = theorem_conditions(in);
  CHECK(at.cond_lambda);  // inclusive inequality

  in.lambda_n *= 0.999;
  CHECK_FALSE(theorem_conditions(in).cond_lambda);

  in.lambda_n = 0.08;
  in.d = 0.0;
  TheoremCheck empty = theorem_conditions(in);
  CHECK(empty.cond_n);  // n >= 0 trivially
  CHECK(empty.l2_bound == 0.0);

  in.d = 2.0;
  double rhs2 = in.C * in.M_n * in.M_n * 8.0 * logpq;
  in.d = 4.0;
  double rhs4 = in.C * in.M_n * in.M_n * 64.0 * logpq;
  CHECK(rhs4 == doctest::Approx(8.0 * rhs2).epsilon(1e-12));

  TheoremInputs bounds = in;
  bounds.lambda_n = 0.1;
  bounds.d = 4.0;
  bounds.delta_min = 0.5;
  TheoremCheck b = theorem_conditions(bounds);
  CHECK(b.l2_bound == doctest::Approx(5.0 * 0.1 * 2.0 / 0.5).epsilon(1e-12));
  CHECK(b.sign_threshold == doctest::Approx(2.0 * b.l2_bound).epsilon(1e-12));

  TheoremInputs bad = in;
  bad.n = 0;
  CHECK_THROWS_AS(theorem_conditions(bad), ValueError);
}

TEST_SUITE_END();
