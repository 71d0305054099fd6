#include "covising/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "covising/parallel.hpp"
#include "covising/rng.hpp"

namespace covising {

namespace {

// Scored flat coefficient indices for a scope.
std::vector<std::int64_t> scored_coords(const ThetaParams& layout, Scope scope) {
  std::vector<std::int64_t> out;
  for (std::int64_t c = 0; c < layout.size(); ++c) {
    auto [j, k, l] = layout.unflatten(c);
    if (j == k && l == 0) continue;  // unpenalized intercepts never scored
    if (scope == Scope::EdgesOnly && j == k) continue;
    out.push_back(c);
  }
  return out;
}

std::vector<std::uint8_t> support_mask(const ThetaParams& theta) {
  std::vector<std::uint8_t> mask(theta.size(), 0);
  const auto& v = theta.data();
  for (std::int64_t c = 0; c < theta.size(); ++c) mask[c] = v[c] != 0.0 ? 1 : 0;
  return mask;
}

}  // namespace

Confusion confusion(const ThetaParams& theta_hat, const GroundTruth& truth, Scope scope) {
  if (theta_hat.dims() != truth.theta_star.dims())
    throw DimensionError("confusion: estimate and truth dims disagree");
  std::vector<std::uint8_t> truth_mask = support_mask(truth.theta_star);
  Confusion c;
  for (std::int64_t idx : scored_coords(theta_hat, scope)) {
    bool est = theta_hat.data()[idx] != 0.0;
    bool tru = truth_mask[idx] != 0;
    if (est && tru)
      ++c.tp;
    else if (est && !tru)
      ++c.fp;
    else if (!est && tru)
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

RocCurve roc_curve(const std::vector<FitResult>& path, const GroundTruth& truth, Scope scope) {
  RocCurve curve;
  curve.scope = scope;
  curve.points.reserve(path.size());
  for (const FitResult& fit : path) {
    RocPoint pt;
    pt.lambda = fit.lambda;
    pt.counts = confusion(fit.theta_hat, truth, scope);
    pt.sensitivity = pt.counts.sensitivity();
    pt.one_minus_specificity = pt.counts.one_minus_specificity();
    curve.points.push_back(pt);
  }
  return curve;
}

double auc(const RocCurve& curve) {
  if (curve.points.empty()) throw ValueError("auc: empty curve");
  std::vector<std::pair<double, double>> pts;  // (1-spec, sens)
  pts.reserve(curve.points.size() + 2);
  pts.emplace_back(0.0, 0.0);
  for (const RocPoint& p : curve.points) pts.emplace_back(p.one_minus_specificity, p.sensitivity);
  pts.emplace_back(1.0, 1.0);
  std::sort(pts.begin(), pts.end());
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    area += (pts[i].first - pts[i - 1].first) * (pts[i].second + pts[i - 1].second) / 2.0;
  return area;
}

std::pair<double, FitResult> select_lambda_validation(const Dataset& train, const Dataset& valid,
                                                      const std::vector<double>& lambdas,
                                                      FitMode mode, const FitConfig& config) {
  if (train.dims() != valid.dims())
    throw DimensionError("select_lambda_validation: train/valid dims disagree");
  std::vector<FitResult> path = fit_path(train, lambdas, mode, config);
  int best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < path.size(); ++i) {
    double score = pseudo_neg_loglik(path[i].theta_hat, valid);
    if (score < best_score) {  // strict: ties stay with the larger lambda
      best_score = score;
      best = static_cast<int>(i);
    }
  }
  return {lambdas[best], path[best]};
}

StabilitySummary stability_selection(const Dataset& data, const std::vector<double>& lambdas,
                                     const StabilityConfig& stab, const FitConfig& config) {
  if (data.n() < 4) throw ValueError("stability_selection: needs n >= 4");
  if (stab.n_subsamples < 1) throw ValueError("stability_selection: n_subsamples must be >= 1");
  if (stab.designated_lambda >= static_cast<int>(lambdas.size()))
    throw ValueError("stability_selection: designated lambda index out of range");

  const int n = data.n();
  const int half = n / 2;
  const int nlam = static_cast<int>(lambdas.size());
  ThetaParams layout(data.dims());
  const std::int64_t ncoef = layout.size();

  StabilitySummary out;
  out.dims = data.dims();
  out.lambdas = lambdas;
  out.n_subsamples = stab.n_subsamples;
  out.subsample_fraction = static_cast<double>(half) / n;

  // counts(c, i) accumulated over subsamples; one block per subsample slot
  // so the parallel map stays deterministic.
  std::vector<Eigen::MatrixXd> counts(stab.n_subsamples);
  std::vector<int> skipped(stab.n_subsamples, 0);
  const bool keep = stab.designated_lambda >= 0;
  if (keep) out.support_at_designated.resize(stab.n_subsamples);

  parallel_for(static_cast<std::size_t>(stab.n_subsamples), stab.threads, [&](std::size_t m) {
    // floor(n/2) rows without replacement, from this subsample's own stream
    Rng rng = substream(stab.seed, 1000 + m);
    std::vector<int> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    for (int i = 0; i < half; ++i) {
      std::uniform_int_distribution<int> pick(i, n - 1);
      std::swap(rows[i], rows[pick(rng)]);
    }
    Eigen::MatrixXd Xs(half, data.p()), Ys(half, data.q());
    for (int i = 0; i < half; ++i) {
      Xs.row(i) = data.X.row(rows[i]);
      Ys.row(i) = data.Y.row(rows[i]);
    }
    Dataset sub(std::move(Xs), std::move(Ys));

    int skip_count = 0;
    std::vector<FitResult> path = fit_path_tolerant(sub, lambdas, stab.mode, config, &skip_count);
    skipped[m] = skip_count;

    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(ncoef, nlam);
    for (int i = 0; i < nlam; ++i) {
      const auto& v = path[i].theta_hat.data();
      for (std::int64_t c = 0; c < ncoef; ++c)
        if (v[c] != 0.0) block(c, i) = 1.0;
    }
    counts[m] = std::move(block);
    if (keep) out.support_at_designated[m] = support_mask(path[stab.designated_lambda].theta_hat);
  });

  out.freq = Eigen::MatrixXd::Zero(ncoef, nlam);
  for (const auto& block : counts) out.freq += block;
  out.freq /= static_cast<double>(stab.n_subsamples);
  out.fstar = out.freq.rowwise().maxCoeff();
  out.skipped_node_fits = std::accumulate(skipped.begin(), skipped.end(), 0);
  return out;
}

std::vector<std::tuple<int, int, double>> rank_edges(const StabilitySummary& summary, int l,
                                                     const std::vector<int>* groups) {
  if (l < 0 || l > summary.dims.p) throw DimensionError("rank_edges: covariate slot out of range");
  if (groups && static_cast<int>(groups->size()) != summary.dims.q)
    throw DimensionError("rank_edges: group labels must cover all nodes");
  ThetaParams layout(summary.dims);
  std::vector<std::tuple<int, int, double>> out;
  for (int j = 0; j < summary.dims.q; ++j)
    for (int k = j + 1; k < summary.dims.q; ++k) {
      if (groups && (*groups)[j] == (*groups)[k]) continue;
      out.emplace_back(j, k, summary.fstar[layout.flat_index(j, k, l)]);
    }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (std::get<2>(a) != std::get<2>(b)) return std::get<2>(a) > std::get<2>(b);
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
    return std::get<1>(a) < std::get<1>(b);
  });
  return out;
}

HubRanking hub_ranking(const std::vector<std::vector<std::uint8_t>>& per_subsample_support,
                       ModelDims dims, int l) {
  if (l < 0 || l > dims.p) throw DimensionError("hub_ranking: covariate slot out of range");
  if (per_subsample_support.empty()) throw ValueError("hub_ranking: no subsample fits");
  const int q = dims.q;
  const int M = static_cast<int>(per_subsample_support.size());
  ThetaParams layout(dims);

  HubRanking out;
  out.covariate = l;
  out.degrees.resize(M, q);

  Eigen::MatrixXd ranks(M, q);
  for (int m = 0; m < M; ++m) {
    if (static_cast<std::int64_t>(per_subsample_support[m].size()) != layout.size())
      throw DimensionError("hub_ranking: support mask has wrong length");
    for (int j = 0; j < q; ++j) {
      int deg = 0;
      for (int k = 0; k < q; ++k) {
        if (k == j) continue;
        if (per_subsample_support[m][layout.flat_index(j, k, l)]) ++deg;
      }
      out.degrees(m, j) = deg;
    }
    // rank 1 = highest degree; equal degrees share the average rank
    std::vector<int> order(q);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return out.degrees(m, a) > out.degrees(m, b); });
    int pos = 0;
    while (pos < q) {
      int end = pos;
      while (end + 1 < q && out.degrees(m, order[end + 1]) == out.degrees(m, order[pos])) ++end;
      double avg = (pos + 1 + end + 1) / 2.0;
      for (int t = pos; t <= end; ++t) ranks(m, order[t]) = avg;
      pos = end + 1;
    }
  }

  for (int j = 0; j < q; ++j) {
    std::vector<double> col(M);
    for (int m = 0; m < M; ++m) col[m] = ranks(m, j);
    std::sort(col.begin(), col.end());
    double median = (M % 2 == 1) ? col[M / 2] : (col[M / 2 - 1] + col[M / 2]) / 2.0;
    out.median_ranks.emplace_back(j, median);
  }
  std::stable_sort(out.median_ranks.begin(), out.median_ranks.end(),
                   [](const auto& a, const auto& b) {
                     if (a.second != b.second) return a.second < b.second;
                     return a.first < b.first;
                   });
  return out;
}

}  // namespace covising
