#pragma once

#include <cstdint>
#include <tuple>
#include <utility>
#include <vector>

#include "covising/fit.hpp"
#include "covising/simulate.hpp"

namespace covising {

// Which coordinates are scored for support recovery. Pair intercepts
// theta_jj0 are never scored (they are unpenalized).
enum class Scope { AllPenalized, EdgesOnly };

struct Confusion {
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::int64_t total() const { return tp + fp + tn + fn; }
  double sensitivity() const { return tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0; }
  double one_minus_specificity() const { return fp + tn > 0 ? double(fp) / double(fp + tn) : 0.0; }
};

// Positive = estimated coefficient exactly nonzero (coordinate descent
// produces exact zeros, so no thresholding is involved).
Confusion confusion(const ThetaParams& theta_hat, const GroundTruth& truth, Scope scope);

struct RocPoint {
  double lambda = 0.0;
  double sensitivity = 0.0;
  double one_minus_specificity = 0.0;
  Confusion counts;
};

struct RocCurve {
  std::vector<RocPoint> points;  // one per lambda, in path order
  Scope scope = Scope::AllPenalized;
};

RocCurve roc_curve(const std::vector<FitResult>& path, const GroundTruth& truth, Scope scope);

// Trapezoidal area under the curve after sorting by (1-specificity) and
// extending the curve to (0,0) and (1,1).
double auc(const RocCurve& curve);

// Fits the path on `train`, scores each lambda by the summed negative
// conditional log-likelihood on `valid`, and returns the best (ties go to
// the larger lambda).
std::pair<double, FitResult> select_lambda_validation(const Dataset& train, const Dataset& valid,
                                                      const std::vector<double>& lambdas,
                                                      FitMode mode, const FitConfig& config = {});

struct StabilityConfig {
  int n_subsamples = 100;
  std::uint64_t seed = 0;
  FitMode mode = FitMode::SeparateMax;
  // When >= 0, the per-subsample supports at this lambda index are retained
  // (input to hub_ranking).
  int designated_lambda = -1;
  int threads = 1;
};

struct StabilitySummary {
  ModelDims dims;
  std::vector<double> lambdas;
  // freq(c, i) = fraction of subsamples where coefficient c was nonzero at
  // lambdas[i]; fstar = rowwise max over the grid.
  Eigen::MatrixXd freq;
  Eigen::VectorXd fstar;
  int n_subsamples = 0;
  double subsample_fraction = 0.5;
  int skipped_node_fits = 0;  // degenerate (constant-column) node regressions
  // Per-subsample nonzero masks at designated_lambda (empty when not requested).
  std::vector<std::vector<std::uint8_t>> support_at_designated;
};

/**
 * Meinshausen-Buhlmann style stability selection: n_subsamples refits on
 * floor(n/2) rows drawn without replacement, selection frequencies recorded
 * per coefficient across the shared lambda grid. Deterministic given
 * stab.seed. Subsamples with constant response columns have those node fits
 * skipped and recorded as all-zero, counted in skipped_node_fits.
 */
StabilitySummary stability_selection(const Dataset& data, const std::vector<double>& lambdas,
                                     const StabilityConfig& stab, const FitConfig& config = {});

// Edges (j, k, f*_jkl) for covariate slot l, sorted by f* descending, ties in
// (j, k) lexicographic order. `groups`, when given, keeps only pairs whose
// endpoints lie in different groups.
std::vector<std::tuple<int, int, double>> rank_edges(const StabilitySummary& summary, int l,
                                                     const std::vector<int>* groups = nullptr);

struct HubRanking {
  int covariate = 0;
  // (node, median rank), sorted by median rank ascending (ties by node).
  std::vector<std::pair<int, double>> median_ranks;
  // degrees(m, j) = covariate-specific degree of node j in subsample m.
  Eigen::MatrixXi degrees;
};

/**
 * Covariate-specific hub ranking: degree d_jl = #{k != j : theta_hat_jkl != 0}
 * per subsample, nodes ranked per subsample (rank 1 = highest degree, ties by
 * average rank), then the median rank over subsamples.
 */
HubRanking hub_ranking(const std::vector<std::vector<std::uint8_t>>& per_subsample_support,
                       ModelDims dims, int l);

}  // namespace covising
