#include "covising/simulate.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "covising/parallel.hpp"

namespace covising {

namespace {

// Fixed sub-stream tags for the stages of simulate_dataset.
constexpr std::uint64_t kGraphStream = 1;
constexpr std::uint64_t kThetaStream = 2;
constexpr std::uint64_t kCovariateStream = 3;
constexpr std::uint64_t kRowStreamBase = 16;

int pick_weighted(const std::vector<double>& w, double total, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, total);
  double u = unif(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(w.size()) - 1;
}

}  // namespace

bool GraphSpec::has_edge(int j, int k) const {
  if (j > k) std::swap(j, k);
  return std::binary_search(edges.begin(), edges.end(), std::make_pair(j, k));
}

std::vector<int> GraphSpec::degrees() const {
  std::vector<int> deg(q, 0);
  for (auto [j, k] : edges) {
    ++deg[j];
    ++deg[k];
  }
  return deg;
}

bool GraphSpec::connected() const {
  if (q <= 1) return true;
  std::vector<std::vector<int>> adj(q);
  for (auto [j, k] : edges) {
    adj[j].push_back(k);
    adj[k].push_back(j);
  }
  std::vector<char> seen(q, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int w : adj[v])
      if (!seen[w]) {
        seen[w] = 1;
        ++reached;
        stack.push_back(w);
      }
  }
  return reached == q;
}

GraphSpec gen_scale_free(int q, int n_edges, Rng& rng) {
  if (q < 1) throw ValueError("gen_scale_free: q must be >= 1");
  std::int64_t max_edges = static_cast<std::int64_t>(q) * (q - 1) / 2;
  if (n_edges < q - 1 || n_edges > max_edges)
    throw ValueError("gen_scale_free: n_edges = " + std::to_string(n_edges) +
                     " outside [q-1, q(q-1)/2] = [" + std::to_string(q - 1) + ", " +
                     std::to_string(max_edges) + "]");

  GraphSpec g;
  g.q = q;
  std::vector<int> deg(q, 0);

  // Preferential-attachment tree.
  for (int v = 1; v < q; ++v) {
    std::vector<double> w(v);
    double total = 0.0;
    for (int u = 0; u < v; ++u) {
      w[u] = deg[u] + 1.0;
      total += w[u];
    }
    int u = pick_weighted(w, total, rng);
    g.edges.emplace_back(u, v);
    ++deg[u];
    ++deg[v];
  }
  std::sort(g.edges.begin(), g.edges.end());

  // Densify: remaining edges drawn over non-adjacent pairs with weight
  // deg(a) * deg(b).
  int remaining = n_edges - (q - 1);
  for (int e = 0; e < remaining; ++e) {
    std::vector<std::pair<int, int>> candidates;
    std::vector<double> w;
    double total = 0.0;
    for (int a = 0; a < q; ++a)
      for (int b = a + 1; b < q; ++b) {
        if (g.has_edge(a, b)) continue;
        candidates.emplace_back(a, b);
        double wt = static_cast<double>(deg[a]) * deg[b];
        w.push_back(wt);
        total += wt;
      }
    int pick = pick_weighted(w, total, rng);
    auto [a, b] = candidates[pick];
    g.edges.emplace_back(a, b);
    ++deg[a];
    ++deg[b];
    std::sort(g.edges.begin(), g.edges.end());
  }
  return g;
}

GroundTruth gen_theta(const GraphSpec& graph, int p, double rho, double beta, Rng& rng) {
  if (rho < 0.0 || rho > 1.0) throw ValueError("gen_theta: rho must lie in [0,1]");
  if (beta <= 0.0) throw ValueError("gen_theta: beta must be positive");
  if (p < 0) throw ValueError("gen_theta: p must be >= 0");

  GroundTruth out;
  out.theta_star = ThetaParams(ModelDims(graph.q, p));
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  for (int j = 0; j < graph.q; ++j)
    for (int k = j; k < graph.q; ++k) {
      bool active = (j == k) || graph.has_edge(j, k);
      if (!active) continue;
      for (int l = 0; l <= p; ++l) {
        double r = (j == k && l == 0) ? 1.0 : rho;  // intercepts always signal
        double u = unif(rng);
        double v = 0.0;
        if (u < r / 2.0)
          v = beta;
        else if (u < r)
          v = -beta;
        if (v != 0.0) out.theta_star.set(j, k, l, v);
      }
    }
  out.support = out.theta_star.support();
  return out;
}

Eigen::MatrixXd gen_covariates(int n, int p, Rng& rng) {
  if (n < 1) throw ValueError("gen_covariates: n must be >= 1");
  if (p < 0) throw ValueError("gen_covariates: p must be >= 0");
  Eigen::MatrixXd X(n, p);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < p; ++l) X(i, l) = normal(rng);
  return X;
}

Eigen::VectorXd gibbs_sample(const ThetaParams& theta, const Eigen::VectorXd& x,
                             int sweeps, Rng& rng) {
  if (sweeps < 1) throw ValueError("gibbs_sample: sweeps must be >= 1");
  const int q = theta.dims().q;
  const Eigen::MatrixXd A = strength_matrix(theta, x);

  Eigen::VectorXd y = Eigen::VectorXd::Zero(q);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int s = 0; s < sweeps; ++s)
    for (int j = 0; j < q; ++j) {
      double eta = A(j, j);
      for (int k = 0; k < q; ++k)
        if (k != j && y[k] != 0.0) eta += A(j, k);
      y[j] = unif(rng) < sigmoid(eta) ? 1.0 : 0.0;
    }
  return y;
}

Dataset sample_dataset(const ThetaParams& theta, const Eigen::MatrixXd& X,
                       int sweeps, std::uint64_t seed, int threads) {
  const int n = static_cast<int>(X.rows());
  if (X.cols() != theta.dims().p)
    throw DimensionError("sample_dataset: X has wrong number of covariates");
  Eigen::MatrixXd Y(n, theta.dims().q);
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
    Rng row_rng = substream(seed, kRowStreamBase + i);
    Y.row(i) = gibbs_sample(theta, X.row(i).transpose(), sweeps, row_rng).transpose();
  });
  return Dataset(X, Y);
}

SimResult simulate_dataset(const SimConfig& config, int threads) {
  if (config.n < 1) throw ValueError("simulate_dataset: n must be >= 1");

  SimResult out;
  Rng graph_rng = substream(config.seed, kGraphStream);
  out.graph = gen_scale_free(config.dims.q, config.n_edges, graph_rng);

  Rng theta_rng = substream(config.seed, kThetaStream);
  out.truth = gen_theta(out.graph, config.dims.p, config.rho, config.beta, theta_rng);

  Rng x_rng = substream(config.seed, kCovariateStream);
  Eigen::MatrixXd X = gen_covariates(config.n, config.dims.p, x_rng);

  out.data = sample_dataset(out.truth.theta_star, X, config.gibbs_sweeps, config.seed, threads);
  return out;
}

}  // namespace covising
