#include "covising/fit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "covising/parallel.hpp"

namespace covising {

namespace {

// Column scaling only (no centering), so zero coefficients stay exactly zero
// when estimates are mapped back to the original covariate scale.
struct Standardizer {
  Eigen::VectorXd scale;  // length p; 1.0 for constant columns or when disabled
};

Standardizer make_standardizer(const Dataset& data, bool enabled) {
  const int p = data.p();
  Standardizer st;
  st.scale = Eigen::VectorXd::Ones(p);
  if (!enabled) return st;
  const double n = data.n();
  for (int l = 0; l < p; ++l) {
    double mean = data.X.col(l).mean();
    double sd = std::sqrt((data.X.col(l).array() - mean).square().sum() / n);
    if (sd > 0.0) st.scale[l] = sd;
  }
  return st;
}

// One node's working regression: features z_(k,l) = xs_l * y_k with xs_0 = 1
// and the k = node slot playing a constant-one response.
struct NodeDesign {
  int node = 0;
  int intercept = 0;
  Eigen::MatrixXd Z;     // n x (p+1)q
  Eigen::VectorXd y;
  Eigen::VectorXd curv;  // (1/(4n)) * colwise squared norm, the shooting curvature
};

NodeDesign build_node_design(const Dataset& data, int j, const Standardizer& st) {
  const int n = data.n(), q = data.q(), p = data.p();
  NodeDesign d;
  d.node = j;
  d.intercept = NodeSubvector::index(j, 0, p);
  d.Z.resize(n, static_cast<Eigen::Index>(p + 1) * q);
  for (int k = 0; k < q; ++k) {
    Eigen::VectorXd yk = (k == j) ? Eigen::VectorXd::Ones(n) : Eigen::VectorXd(data.Y.col(k));
    d.Z.col(NodeSubvector::index(k, 0, p)) = yk;
    for (int l = 1; l <= p; ++l)
      d.Z.col(NodeSubvector::index(k, l, p)) = yk.cwiseProduct(data.X.col(l - 1)) / st.scale[l - 1];
  }
  d.y = data.Y.col(j);
  d.curv = d.Z.colwise().squaredNorm().transpose() / (4.0 * n);
  return d;
}

void check_node_index(const Dataset& data, int j, const char* who) {
  if (j < 0 || j >= data.q())
    throw DimensionError(std::string(who) + ": node index out of range");
}

double logit_or_throw(double ybar, int node, const char* who) {
  if (ybar <= 0.0 || ybar >= 1.0)
    throw DegenerateResponseError(std::string(who) + ": response column of node " +
                                  std::to_string(node) +
                                  " is constant, the unpenalized intercept is unbounded");
  return std::log(ybar / (1.0 - ybar));
}

inline void refresh_resid(const Eigen::VectorXd& eta, const Eigen::VectorXd& y,
                          Eigen::VectorXd& resid) {
  resid = (1.0 / (1.0 + (-eta.array()).exp())) - y.array();
}

// resid and the logistic weights p(1-p) in one sweep
inline void refresh_resid_w(const Eigen::VectorXd& eta, const Eigen::VectorXd& y,
                            Eigen::VectorXd& resid, Eigen::VectorXd& w) {
  Eigen::ArrayXd prob = 1.0 / (1.0 + (-eta.array()).exp());
  resid = prob - y.array();
  w = prob * (1.0 - prob);
}

double mean_neg_loglik(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  const Eigen::Index n = eta.size();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) acc += log1pexp(eta[i]) - y[i] * eta[i];
  return acc / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Separate (per-node) solver.
// ---------------------------------------------------------------------------

struct NodeState {
  Eigen::VectorXd theta;  // internal (scaled-column) coefficients
  Eigen::VectorXd eta;
  Eigen::VectorXd resid;  // sigmoid(eta) - y
  Eigen::VectorXd w;      // sigmoid(eta) * (1 - sigmoid(eta))
};

double node_objective(const NodeDesign& d, const NodeState& s, double lambda) {
  double pen = 0.0;
  for (Eigen::Index m = 0; m < s.theta.size(); ++m)
    if (m != d.intercept) pen += std::abs(s.theta[m]);
  return mean_neg_loglik(s.eta, d.y) + lambda * pen;
}

double node_kkt(const NodeDesign& d, const NodeState& s, double lambda) {
  const double n = static_cast<double>(d.y.size());
  Eigen::VectorXd g = d.Z.transpose() * s.resid / n;
  double viol = 0.0;
  for (Eigen::Index m = 0; m < g.size(); ++m) {
    double v;
    if (m == d.intercept)
      v = std::abs(g[m]);
    else if (s.theta[m] == 0.0)
      v = std::max(std::abs(g[m]) - lambda, 0.0);
    else
      v = std::abs(g[m] + lambda * (s.theta[m] > 0.0 ? 1.0 : -1.0));
    viol = std::max(viol, v);
  }
  return viol;
}

// One shooting cycle over `coords` with exact per-coordinate gradients.
// newton = false uses the global 1/4 logistic curvature bound, under which
// every single step provably decreases the penalized objective. newton = true
// uses the current weights p(1-p) instead (clamped from below at 1% of the
// bound curvature), which converges much faster but is only guaranteed
// monotone at the pass level by the caller's snapshot/fallback. Returns the
// max absolute coefficient change.
double node_cycle(const NodeDesign& d, NodeState& s, double lambda,
                  const std::vector<int>& coords, bool newton) {
  const double n = static_cast<double>(d.y.size());
  double maxd = 0.0;
  for (int m : coords) {
    double a_bound = d.curv[m];
    if (a_bound <= 0.0) {
      // All-zero feature: any mass here is pure penalty.
      if (m != d.intercept && s.theta[m] != 0.0) {
        maxd = std::max(maxd, std::abs(s.theta[m]));
        s.theta[m] = 0.0;
      }
      continue;
    }
    double g = d.Z.col(m).dot(s.resid) / n;
    // Zero coordinates that stay zero never need a curvature evaluation.
    if (m != d.intercept && s.theta[m] == 0.0 && std::abs(g) <= lambda) continue;
    double a = a_bound;
    if (newton) {
      double aw = (d.Z.col(m).array().square() * s.w.array()).sum() / n;
      a = std::max(aw, 0.01 * a_bound);
    }
    double t = (m == d.intercept) ? s.theta[m] - g / a
                                  : soft_threshold(a * s.theta[m] - g, lambda) / a;
    double delta = t - s.theta[m];
    if (delta != 0.0) {
      s.theta[m] = t;
      s.eta += delta * d.Z.col(m);
      refresh_resid_w(s.eta, d.y, s.resid, s.w);
      maxd = std::max(maxd, std::abs(delta));
    }
  }
  return maxd;
}

NodeFit solve_node(const NodeDesign& d, double lambda, const FitConfig& cfg,
                   const Eigen::VectorXd* init_internal, const Standardizer& st, int p) {
  if (lambda < 0.0) throw ValueError("fit_node: lambda must be >= 0");
  const int m = static_cast<int>(d.curv.size());
  const double c0 = logit_or_throw(d.y.mean(), d.node, "fit_node");

  NodeState s;
  if (init_internal) {
    s.theta = *init_internal;
  } else {
    s.theta = Eigen::VectorXd::Zero(m);
    s.theta[d.intercept] = c0;
  }
  s.eta = d.Z * s.theta;
  refresh_resid_w(s.eta, d.y, s.resid, s.w);

  NodeFit fit;
  fit.lambda = lambda;
  double objective = node_objective(d, s, lambda);
  if (cfg.track_objective) fit.objective_history.push_back(objective);

  std::vector<int> all(m);
  std::iota(all.begin(), all.end(), 0);
  std::vector<int> active;
  bool full = true;
  int pass = 0;
  bool converged = false;
  Eigen::VectorXd snap_theta, snap_eta;

  while (pass < cfg.max_passes) {
    ++pass;
    const std::vector<int>& coords = full ? all : active;
    // Newton-weighted pass, with a snapshot so a non-decreasing pass can be
    // redone under the 1/4 bound (which decreases the objective by
    // construction). Keeps the objective monotone across every pass.
    snap_theta = s.theta;
    snap_eta = s.eta;
    double maxd = node_cycle(d, s, lambda, coords, true);
    double new_objective = node_objective(d, s, lambda);
    if (new_objective > objective) {
      s.theta = snap_theta;
      s.eta = snap_eta;
      refresh_resid_w(s.eta, d.y, s.resid, s.w);
      maxd = node_cycle(d, s, lambda, coords, false);
      new_objective = node_objective(d, s, lambda);
    }
    objective = new_objective;
    if (cfg.track_objective) fit.objective_history.push_back(objective);
    if (full) {
      if (maxd < cfg.tol) {
        // Remove incremental drift before certifying.
        s.eta = d.Z * s.theta;
        refresh_resid_w(s.eta, d.y, s.resid, s.w);
        fit.kkt_residual = node_kkt(d, s, lambda);
        if (fit.kkt_residual <= 10.0 * cfg.tol) {
          converged = true;
          break;
        }
      } else {
        active.clear();
        for (int c = 0; c < m; ++c)
          if (c == d.intercept || s.theta[c] != 0.0) active.push_back(c);
        full = false;
      }
    } else if (maxd < cfg.tol) {
      full = true;  // confirm on the full coordinate set
    }
  }

  if (!converged) {
    s.eta = d.Z * s.theta;
    refresh_resid_w(s.eta, d.y, s.resid, s.w);
    fit.kkt_residual = node_kkt(d, s, lambda);
  }
  fit.passes = pass;
  fit.converged = converged;
  fit.objective = node_objective(d, s, lambda);

  // Report on the original covariate scale (pure rescaling, zeros preserved).
  fit.theta.node = d.node;
  fit.theta.values = s.theta;
  for (int k = 0; k * (p + 1) < m; ++k)
    for (int l = 1; l <= p; ++l)
      fit.theta.values[NodeSubvector::index(k, l, p)] /= st.scale[l - 1];
  return fit;
}

Eigen::VectorXd to_internal(const NodeSubvector& sub, const Standardizer& st, int p, int q) {
  if (sub.values.size() != static_cast<Eigen::Index>(p + 1) * q)
    throw DimensionError("warm start subvector has the wrong length");
  Eigen::VectorXd v = sub.values;
  for (int k = 0; k < q; ++k)
    for (int l = 1; l <= p; ++l) v[NodeSubvector::index(k, l, p)] *= st.scale[l - 1];
  return v;
}

// Max absolute penalized gradient at the intercept-only optimum, computed
// through the same expressions the solver's first cycle uses, so a fit at
// exactly this lambda keeps every penalized coordinate at zero.
double lambda_max_node_impl(const NodeDesign& d) {
  const double c0 = logit_or_throw(d.y.mean(), d.node, "lambda_max_node");
  const double n = static_cast<double>(d.y.size());
  Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(d.curv.size());
  theta0[d.intercept] = c0;
  Eigen::VectorXd eta = d.Z * theta0;
  Eigen::VectorXd resid;
  refresh_resid(eta, d.y, resid);
  double mx = 0.0;
  for (Eigen::Index m = 0; m < d.curv.size(); ++m) {
    if (m == d.intercept) continue;
    mx = std::max(mx, std::abs(d.Z.col(m).dot(resid) / n));
  }
  // relative guard so a fit at exactly the returned value certifiably stays
  // all-zero despite sub-ulp drift of the intercept
  return mx * (1.0 + 1e-12);
}

}  // namespace

ThetaParams symmetrize_estimates(const NodeEstimates& raws, SymmetrizeRule rule, ModelDims dims) {
  ThetaParams theta(dims);
  const int p = dims.p;
  for (int j = 0; j < dims.q; ++j)
    for (int l = 0; l <= p; ++l)
      theta.set(j, j, l, raws[j].theta.values[NodeSubvector::index(j, l, p)]);
  for (int j = 0; j < dims.q; ++j)
    for (int k = j + 1; k < dims.q; ++k)
      for (int l = 0; l <= p; ++l) {
        double a = raws[j].theta.values[NodeSubvector::index(k, l, p)];
        double b = raws[k].theta.values[NodeSubvector::index(j, l, p)];
        double v;
        if (rule == SymmetrizeRule::SeparateMax)
          v = std::abs(a) >= std::abs(b) ? a : b;  // ties keep the lower-index fit
        else
          v = std::abs(a) <= std::abs(b) ? a : b;
        theta.set(j, k, l, v);
      }
  return theta;
}

namespace {

// ---------------------------------------------------------------------------
// Joint solver over the symmetric parameter.
// ---------------------------------------------------------------------------

struct JointDesign {
  ModelDims dims;
  std::vector<NodeDesign> nodes;
  std::vector<char> skip;  // regressions excluded from the objective
  // Canonical coordinate (pair-major, as ThetaParams) -> design columns.
  struct CoordRef {
    int reg_a, col_a;      // owning regression a and its column
    int reg_b, col_b;      // second regression for off-diagonal pairs, else -1
    bool intercept;
    double curv;
  };
  std::vector<CoordRef> coords;
};

JointDesign build_joint_design(const Dataset& data, const Standardizer& st,
                               const std::vector<int>& excluded_nodes) {
  JointDesign jd;
  jd.dims = data.dims();
  const int q = jd.dims.q, p = jd.dims.p;
  const double n = data.n();
  jd.skip.assign(q, 0);
  for (int j : excluded_nodes) {
    if (j < 0 || j >= q) throw DimensionError("fit_joint: excluded node out of range");
    jd.skip[j] = 1;
  }
  jd.nodes.reserve(q);
  for (int j = 0; j < q; ++j) jd.nodes.push_back(build_node_design(data, j, st));

  for (int a = 0; a < q; ++a)
    for (int b = a; b < q; ++b)
      for (int l = 0; l <= p; ++l) {
        JointDesign::CoordRef r;
        r.reg_a = a;
        r.col_a = NodeSubvector::index(b, l, p);
        r.reg_b = (a == b) ? -1 : b;
        r.col_b = (a == b) ? -1 : NodeSubvector::index(a, l, p);
        r.intercept = (a == b && l == 0);
        double c = 0.0;
        if (!jd.skip[a]) c += jd.nodes[a].Z.col(r.col_a).squaredNorm();
        if (r.reg_b >= 0 && !jd.skip[b]) c += jd.nodes[b].Z.col(r.col_b).squaredNorm();
        r.curv = c / (4.0 * n);
        jd.coords.push_back(r);
      }
  return jd;
}

struct JointState {
  Eigen::VectorXd theta;  // canonical flat coefficients, internal scale
  std::vector<Eigen::VectorXd> eta;
  std::vector<Eigen::VectorXd> resid;
  std::vector<Eigen::VectorXd> w;
};

void joint_refresh(const JointDesign& jd, JointState& s) {
  const int q = jd.dims.q, p = jd.dims.p;
  ThetaParams tmp(jd.dims);
  tmp.data().assign(s.theta.data(), s.theta.data() + s.theta.size());
  s.eta.assign(q, Eigen::VectorXd());
  s.resid.assign(q, Eigen::VectorXd());
  s.w.assign(q, Eigen::VectorXd());
  for (int j = 0; j < q; ++j) {
    if (jd.skip[j]) continue;
    Eigen::VectorXd sub(static_cast<Eigen::Index>(p + 1) * q);
    for (int k = 0; k < q; ++k)
      for (int l = 0; l <= p; ++l) sub[NodeSubvector::index(k, l, p)] = tmp(j, k, l);
    s.eta[j] = jd.nodes[j].Z * sub;
    refresh_resid_w(s.eta[j], jd.nodes[j].y, s.resid[j], s.w[j]);
  }
}

double joint_objective(const JointDesign& jd, const JointState& s, double lambda) {
  double acc = 0.0;
  for (int j = 0; j < jd.dims.q; ++j)
    if (!jd.skip[j]) acc += mean_neg_loglik(s.eta[j], jd.nodes[j].y);
  double pen = 0.0;
  for (std::size_t c = 0; c < jd.coords.size(); ++c)
    if (!jd.coords[c].intercept) pen += std::abs(s.theta[c]);
  return acc + lambda * pen;
}

double joint_grad_coord(const JointDesign& jd, const JointState& s,
                        const JointDesign::CoordRef& r, double n) {
  double g = 0.0;
  if (!jd.skip[r.reg_a]) g += jd.nodes[r.reg_a].Z.col(r.col_a).dot(s.resid[r.reg_a]) / n;
  if (r.reg_b >= 0 && !jd.skip[r.reg_b])
    g += jd.nodes[r.reg_b].Z.col(r.col_b).dot(s.resid[r.reg_b]) / n;
  return g;
}

double joint_kkt(const JointDesign& jd, const JointState& s, double lambda, double n) {
  double viol = 0.0;
  for (std::size_t c = 0; c < jd.coords.size(); ++c) {
    const auto& r = jd.coords[c];
    if (r.curv <= 0.0 && s.theta[c] == 0.0) continue;
    double g = joint_grad_coord(jd, s, r, n);
    double v;
    if (r.intercept) {
      if (jd.skip[r.reg_a]) continue;  // frozen intercept of an excluded node
      v = std::abs(g);
    } else if (s.theta[c] == 0.0) {
      v = std::max(std::abs(g) - lambda, 0.0);
    } else {
      v = std::abs(g + lambda * (s.theta[c] > 0.0 ? 1.0 : -1.0));
    }
    viol = std::max(viol, v);
  }
  return viol;
}

double joint_cycle(const JointDesign& jd, JointState& s, double lambda, double n,
                   const std::vector<int>& coords, bool newton) {
  double maxd = 0.0;
  for (int c : coords) {
    const auto& r = jd.coords[c];
    double a_bound = r.curv;
    if (a_bound <= 0.0) {
      if (!r.intercept && s.theta[c] != 0.0) {
        maxd = std::max(maxd, std::abs(s.theta[c]));
        s.theta[c] = 0.0;
      }
      continue;
    }
    double g = joint_grad_coord(jd, s, r, n);
    if (!r.intercept && s.theta[c] == 0.0 && std::abs(g) <= lambda) continue;
    double a = a_bound;
    if (newton) {
      double aw = 0.0;
      if (!jd.skip[r.reg_a])
        aw += (jd.nodes[r.reg_a].Z.col(r.col_a).array().square() * s.w[r.reg_a].array()).sum() / n;
      if (r.reg_b >= 0 && !jd.skip[r.reg_b])
        aw += (jd.nodes[r.reg_b].Z.col(r.col_b).array().square() * s.w[r.reg_b].array()).sum() / n;
      a = std::max(aw, 0.01 * a_bound);
    }
    double t = r.intercept ? s.theta[c] - g / a
                           : soft_threshold(a * s.theta[c] - g, lambda) / a;
    double delta = t - s.theta[c];
    if (delta != 0.0) {
      s.theta[c] = t;
      if (!jd.skip[r.reg_a]) {
        s.eta[r.reg_a] += delta * jd.nodes[r.reg_a].Z.col(r.col_a);
        refresh_resid_w(s.eta[r.reg_a], jd.nodes[r.reg_a].y, s.resid[r.reg_a], s.w[r.reg_a]);
      }
      if (r.reg_b >= 0 && !jd.skip[r.reg_b]) {
        s.eta[r.reg_b] += delta * jd.nodes[r.reg_b].Z.col(r.col_b);
        refresh_resid_w(s.eta[r.reg_b], jd.nodes[r.reg_b].y, s.resid[r.reg_b], s.w[r.reg_b]);
      }
      maxd = std::max(maxd, std::abs(delta));
    }
  }
  return maxd;
}

FitResult solve_joint(const Dataset& data, double lambda, const FitConfig& cfg,
                      const ThetaParams* init, const std::vector<int>& excluded_nodes) {
  if (lambda < 0.0) throw ValueError("fit_joint: lambda must be >= 0");
  const Standardizer st = make_standardizer(data, cfg.standardize);
  JointDesign jd = build_joint_design(data, st, excluded_nodes);
  const int q = jd.dims.q, p = jd.dims.p;
  const double n = data.n();
  const int ncoef = static_cast<int>(jd.coords.size());

  for (int j = 0; j < q; ++j)
    if (!jd.skip[j]) logit_or_throw(jd.nodes[j].y.mean(), j, "fit_joint");

  JointState s;
  s.theta = Eigen::VectorXd::Zero(ncoef);
  if (init) {
    if (init->dims() != jd.dims) throw DimensionError("fit_joint: warm start has wrong dims");
    for (int c = 0; c < ncoef; ++c) {
      int l = c % (p + 1);  // slot index within the pair block
      s.theta[c] = init->data()[c] * (l >= 1 ? st.scale[l - 1] : 1.0);
    }
  } else {
    ThetaParams layout(jd.dims);
    for (int j = 0; j < q; ++j)
      if (!jd.skip[j])
        s.theta[layout.flat_index(j, j, 0)] =
            std::log(jd.nodes[j].y.mean() / (1.0 - jd.nodes[j].y.mean()));
  }
  joint_refresh(jd, s);

  FitResult fit;
  fit.lambda = lambda;

  std::vector<int> all(ncoef);
  std::iota(all.begin(), all.end(), 0);
  std::vector<int> active;
  bool full = true;
  int pass = 0;
  bool converged = false;
  double objective = joint_objective(jd, s, lambda);
  if (cfg.track_objective) fit.objective_history.push_back(objective);
  Eigen::VectorXd snap_theta;
  std::vector<Eigen::VectorXd> snap_eta;

  while (pass < cfg.max_passes) {
    ++pass;
    const std::vector<int>& coords = full ? all : active;
    snap_theta = s.theta;
    snap_eta = s.eta;
    double maxd = joint_cycle(jd, s, lambda, n, coords, true);
    double new_objective = joint_objective(jd, s, lambda);
    if (new_objective > objective) {
      s.theta = snap_theta;
      s.eta = snap_eta;
      for (int j = 0; j < q; ++j)
        if (!jd.skip[j]) refresh_resid_w(s.eta[j], jd.nodes[j].y, s.resid[j], s.w[j]);
      maxd = joint_cycle(jd, s, lambda, n, coords, false);
      new_objective = joint_objective(jd, s, lambda);
    }
    objective = new_objective;
    if (cfg.track_objective) fit.objective_history.push_back(objective);
    if (full) {
      if (maxd < cfg.tol) {
        joint_refresh(jd, s);
        fit.kkt_residual = joint_kkt(jd, s, lambda, n);
        if (fit.kkt_residual <= 10.0 * cfg.tol) {
          converged = true;
          break;
        }
      } else {
        active.clear();
        for (int c = 0; c < ncoef; ++c)
          if (jd.coords[c].intercept || s.theta[c] != 0.0) active.push_back(c);
        full = false;
      }
    } else if (maxd < cfg.tol) {
      full = true;
    }
  }

  if (!converged) {
    joint_refresh(jd, s);
    fit.kkt_residual = joint_kkt(jd, s, lambda, n);
  }
  fit.passes = pass;
  fit.converged = converged;
  fit.objective = joint_objective(jd, s, lambda);

  fit.theta_hat = ThetaParams(jd.dims);
  for (int c = 0; c < ncoef; ++c) {
    int l = c % (p + 1);
    fit.theta_hat.data()[c] = s.theta[c] / (l >= 1 ? st.scale[l - 1] : 1.0);
  }
  return fit;
}

}  // namespace

double soft_threshold(double z, double gamma) {
  if (gamma < 0.0) throw ValueError("soft_threshold: gamma must be >= 0");
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

NodeFit fit_node(const Dataset& data, int j, double lambda, const FitConfig& config,
                 const NodeSubvector* init) {
  check_node_index(data, j, "fit_node");
  const Standardizer st = make_standardizer(data, config.standardize);
  NodeDesign d = build_node_design(data, j, st);
  if (init) {
    if (init->node != j) throw DimensionError("fit_node: warm start is for another node");
    Eigen::VectorXd v = to_internal(*init, st, data.p(), data.q());
    return solve_node(d, lambda, config, &v, st, data.p());
  }
  return solve_node(d, lambda, config, nullptr, st, data.p());
}

double lambda_max_node(const Dataset& data, int j, const FitConfig& config) {
  check_node_index(data, j, "lambda_max_node");
  const Standardizer st = make_standardizer(data, config.standardize);
  return lambda_max_node_impl(build_node_design(data, j, st));
}

double lambda_max(const Dataset& data, FitMode mode, const FitConfig& config) {
  const Standardizer st = make_standardizer(data, config.standardize);
  if (mode != FitMode::Joint) {
    double mx = 0.0;
    for (int j = 0; j < data.q(); ++j)
      mx = std::max(mx, lambda_max_node_impl(build_node_design(data, j, st)));
    return mx;
  }
  JointDesign jd = build_joint_design(data, st, {});
  const double n = data.n();
  JointState s;
  s.theta = Eigen::VectorXd::Zero(static_cast<int>(jd.coords.size()));
  ThetaParams tmp(jd.dims);
  for (int j = 0; j < jd.dims.q; ++j) {
    double ybar = jd.nodes[j].y.mean();
    s.theta[tmp.flat_index(j, j, 0)] = logit_or_throw(ybar, j, "lambda_max");
  }
  joint_refresh(jd, s);
  double mx = 0.0;
  for (std::size_t c = 0; c < jd.coords.size(); ++c) {
    if (jd.coords[c].intercept) continue;
    mx = std::max(mx, std::abs(joint_grad_coord(jd, s, jd.coords[c], n)));
  }
  return mx * (1.0 + 1e-12);
}

std::vector<double> lambda_grid(double lambda_max, int count, double min_ratio) {
  if (lambda_max <= 0.0) throw ValueError("lambda_grid: lambda_max must be positive");
  if (count < 1) throw ValueError("lambda_grid: count must be >= 1");
  if (min_ratio <= 0.0 || min_ratio > 1.0) throw ValueError("lambda_grid: min_ratio in (0,1]");
  std::vector<double> grid(count);
  if (count == 1) {
    grid[0] = lambda_max;
    return grid;
  }
  for (int i = 0; i < count; ++i)
    grid[i] = lambda_max * std::pow(min_ratio, static_cast<double>(i) / (count - 1));
  return grid;
}

std::pair<FitResult, NodeEstimates> fit_separate(const Dataset& data, double lambda,
                                                 const FitConfig& config,
                                                 const ThetaParams* init) {
  if (init && init->dims() != data.dims())
    throw DimensionError("fit_separate: warm start has wrong dims");
  const Standardizer st = make_standardizer(data, config.standardize);
  const int q = data.q();
  NodeEstimates raws(q);
  parallel_for(static_cast<std::size_t>(q), config.threads, [&](std::size_t j) {
    NodeDesign d = build_node_design(data, static_cast<int>(j), st);
    if (init) {
      Eigen::VectorXd warm = to_internal(node_subvector(*init, static_cast<int>(j)), st,
                                         data.p(), data.q());
      raws[j] = solve_node(d, lambda, config, &warm, st, data.p());
    } else {
      raws[j] = solve_node(d, lambda, config, nullptr, st, data.p());
    }
  });

  FitResult res;
  res.lambda = lambda;
  res.theta_hat = symmetrize_estimates(raws, config.symmetrize, data.dims());
  res.converged = true;
  for (const NodeFit& nf : raws) {
    res.objective += nf.objective;
    res.kkt_residual = std::max(res.kkt_residual, nf.kkt_residual);
    res.passes = std::max(res.passes, nf.passes);
    res.converged = res.converged && nf.converged;
  }
  return {std::move(res), std::move(raws)};
}

FitResult fit_joint(const Dataset& data, double lambda, const FitConfig& config,
                    const ThetaParams* init) {
  return solve_joint(data, lambda, config, init, {});
}

namespace {

std::vector<FitResult> fit_path_impl(const Dataset& data, const std::vector<double>& lambdas,
                                     FitMode mode, const FitConfig& config,
                                     bool tolerate_degenerate, int* skipped_nodes) {
  if (lambdas.empty()) throw ValueError("fit_path: empty lambda grid");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (lambdas[i] < 0.0) throw ValueError("fit_path: lambdas must be >= 0");
    if (i > 0 && lambdas[i] >= lambdas[i - 1])
      throw ValueError("fit_path: lambdas must be strictly descending");
  }
  const int nlam = static_cast<int>(lambdas.size());
  const int q = data.q();
  std::vector<FitResult> out(nlam);

  std::vector<int> degenerate;
  if (tolerate_degenerate) {
    for (int j = 0; j < q; ++j) {
      double ybar = data.Y.col(j).mean();
      if (ybar <= 0.0 || ybar >= 1.0) degenerate.push_back(j);
    }
  }
  if (skipped_nodes) *skipped_nodes = static_cast<int>(degenerate.size());

  if (mode == FitMode::Joint) {
    ThetaParams warm(data.dims());
    bool have_warm = false;
    for (int i = 0; i < nlam; ++i) {
      out[i] = solve_joint(data, lambdas[i], config, have_warm ? &warm : nullptr, degenerate);
      warm = out[i].theta_hat;
      have_warm = true;
    }
    return out;
  }

  FitConfig node_cfg = config;
  node_cfg.symmetrize = (mode == FitMode::SeparateMax) ? SymmetrizeRule::SeparateMax
                                                       : SymmetrizeRule::SeparateMin;
  const Standardizer st = make_standardizer(data, config.standardize);
  const int m = (data.p() + 1) * q;
  // raw fits indexed [lambda][node]
  std::vector<NodeEstimates> raw(nlam, NodeEstimates(q));
  parallel_for(static_cast<std::size_t>(q), config.threads, [&](std::size_t j) {
    int node = static_cast<int>(j);
    if (std::find(degenerate.begin(), degenerate.end(), node) != degenerate.end()) {
      for (int i = 0; i < nlam; ++i) {
        NodeFit nf;  // skipped: recorded as all-zero
        nf.theta.node = node;
        nf.theta.values = Eigen::VectorXd::Zero(m);
        nf.lambda = lambdas[i];
        nf.converged = true;
        raw[i][j] = std::move(nf);
      }
      return;
    }
    NodeDesign d = build_node_design(data, node, st);
    Eigen::VectorXd warm;
    for (int i = 0; i < nlam; ++i) {
      NodeFit nf = solve_node(d, lambdas[i], node_cfg, i > 0 ? &warm : nullptr, st, data.p());
      warm = to_internal(nf.theta, st, data.p(), data.q());
      raw[i][j] = std::move(nf);
    }
  });

  for (int i = 0; i < nlam; ++i) {
    FitResult res;
    res.lambda = lambdas[i];
    res.theta_hat = symmetrize_estimates(raw[i], node_cfg.symmetrize, data.dims());
    res.converged = true;
    for (const NodeFit& nf : raw[i]) {
      res.objective += nf.objective;
      res.kkt_residual = std::max(res.kkt_residual, nf.kkt_residual);
      res.passes = std::max(res.passes, nf.passes);
      res.converged = res.converged && nf.converged;
    }
    out[i] = std::move(res);
  }
  return out;
}

}  // namespace

std::vector<FitResult> fit_path(const Dataset& data, const std::vector<double>& lambdas,
                                FitMode mode, const FitConfig& config) {
  return fit_path_impl(data, lambdas, mode, config, false, nullptr);
}

std::vector<FitResult> fit_path_tolerant(const Dataset& data, const std::vector<double>& lambdas,
                                         FitMode mode, const FitConfig& config,
                                         int* skipped_nodes) {
  return fit_path_impl(data, lambdas, mode, config, true, skipped_nodes);
}

double kkt_residual(const ThetaParams& theta, const Dataset& data, double lambda,
                    FitMode mode, const FitConfig& config) {
  if (theta.dims() != data.dims())
    throw DimensionError("kkt_residual: theta and dataset dims disagree");
  const Standardizer st = make_standardizer(data, config.standardize);
  const int q = data.q(), p = data.p();

  if (mode == FitMode::Joint) {
    JointDesign jd = build_joint_design(data, st, {});
    JointState s;
    s.theta.resize(theta.size());
    for (std::int64_t c = 0; c < theta.size(); ++c) {
      int l = static_cast<int>(c % (p + 1));
      s.theta[c] = theta.data()[c] * (l >= 1 ? st.scale[l - 1] : 1.0);
    }
    joint_refresh(jd, s);
    return joint_kkt(jd, s, lambda, data.n());
  }

  double viol = 0.0;
  for (int j = 0; j < q; ++j) {
    NodeDesign d = build_node_design(data, j, st);
    NodeState s;
    s.theta = to_internal(node_subvector(theta, j), st, p, q);
    s.eta = d.Z * s.theta;
    refresh_resid(s.eta, d.y, s.resid);
    viol = std::max(viol, node_kkt(d, s, lambda));
  }
  return viol;
}

}  // namespace covising
