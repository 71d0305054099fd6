#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "covising/model.hpp"
#include "covising/rng.hpp"

namespace covising {

// Undirected simple graph on q nodes; edges stored as sorted (j < k) pairs.
struct GraphSpec {
  int q = 0;
  std::vector<std::pair<int, int>> edges;

  bool has_edge(int j, int k) const;
  int n_edges() const { return static_cast<int>(edges.size()); }
  std::vector<int> degrees() const;
  bool connected() const;
};

struct SimConfig {
  ModelDims dims;
  int n = 0;               // sample size
  int n_edges = 0;         // edge count of the generated graph
  double rho = 0.5;        // expected proportion of effective covariates per pair
  double beta = 1.0;       // signal magnitude
  int gibbs_sweeps = 500;  // full Gibbs sweeps per sample
  std::uint64_t seed = 0;
};

// True parameter plus its exact support (flat ThetaParams indices).
struct GroundTruth {
  ThetaParams theta_star;
  std::vector<std::int64_t> support;
};

struct SimResult {
  Dataset data;
  GroundTruth truth;
  GraphSpec graph;
};

/**
 * Connected scale-free-style graph with exactly n_edges edges: a
 * preferential-attachment tree (each new node attaches to an existing node
 * with probability proportional to degree + 1), then the remaining edges are
 * added one at a time between non-adjacent pairs chosen with probability
 * proportional to the product of endpoint degrees.
 * Requires q - 1 <= n_edges <= q (q - 1) / 2.
 */
GraphSpec gen_scale_free(int q, int n_edges, Rng& rng);

/**
 * Three-valued coefficient draw: for every pair on an edge (and every node
 * diagonal), each of the p+1 slots is +beta with probability rho/2, -beta
 * with probability rho/2, otherwise 0. Node intercepts theta_jj0 always get
 * +-beta (rho forced to 1). Non-edge pairs are all-zero.
 */
GroundTruth gen_theta(const GraphSpec& graph, int p, double rho, double beta, Rng& rng);

// n x p matrix of iid standard normal covariates.
Eigen::MatrixXd gen_covariates(int n, int p, Rng& rng);

/**
 * Single Gibbs draw: starting from the all-zero state, performs `sweeps`
 * full sweeps updating j = 0..q-1 in order, each from its conditional
 * Bernoulli, and returns the final state.
 */
Eigen::VectorXd gibbs_sample(const ThetaParams& theta, const Eigen::VectorXd& x,
                             int sweeps, Rng& rng);

// Samples one response row per row of X, each from an independent Gibbs
// chain with its own sub-stream of `seed` (row order never matters).
Dataset sample_dataset(const ThetaParams& theta, const Eigen::MatrixXd& X,
                       int sweeps, std::uint64_t seed, int threads = 1);

// Full protocol: graph, theta*, covariates, then Gibbs responses; entirely
// determined by config.seed.
SimResult simulate_dataset(const SimConfig& config, int threads = 1);

}  // namespace covising
