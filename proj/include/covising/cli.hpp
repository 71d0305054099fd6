#pragma once

#include <cstdint>
#include <string>

namespace covising::cli {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitParse = 3;
inline constexpr int kExitDimension = 4;
inline constexpr int kExitNoConvergence = 5;
inline constexpr int kExitIo = 6;
inline constexpr int kExitDegenerate = 7;

struct SimulateArgs {
  int q = 10;
  int p = 20;
  int n = 200;
  int n_edges = 10;
  double rho = 0.5;
  double beta = 4.0;
  int sweeps = 500;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
};

struct FitArgs {
  std::string data;  // directory with X.csv / Y.csv
  std::string out;
  std::string mode = "separate-max";  // separate-max | separate-min | joint
  double lambda = -1.0;               // required
  std::string init;                   // optional warm-start theta json
  double tol = 1e-6;
  int max_passes = 10000;
  bool no_standardize = false;
  int threads = 1;
};

struct PathArgs {
  std::string data;
  std::string out;
  std::string mode = "separate-max";
  int lambda_grid = 50;
  double lambda_min_ratio = 0.01;
  double tol = 1e-6;
  int max_passes = 10000;
  bool no_standardize = false;
  int threads = 1;
};

struct RocArgs {
  std::string data;
  std::string truth;  // theta_star.json
  std::string out;
  std::string mode = "separate-max";
  std::string scope = "all";  // all | edges
  int lambda_grid = 50;
  double lambda_min_ratio = 0.01;
  double tol = 1e-6;
  int max_passes = 10000;
  bool no_standardize = false;
  int threads = 1;
};

struct StabilityArgs {
  std::string data;
  std::string out;
  std::string mode = "separate-max";
  int subsamples = 100;
  int lambda_grid = 50;
  double lambda_min_ratio = 0.01;
  std::uint64_t seed = 0;
  double tol = 1e-6;
  int max_passes = 10000;
  bool no_standardize = false;
  int threads = 1;
};

struct HubsArgs {
  std::string data;
  std::string out;
  std::string mode = "separate-max";
  std::string val;       // validation dir to select the designated lambda, or
  double lambda = -1.0;  // explicit lambda (nearest grid point is used)
  int subsamples = 100;
  int lambda_grid = 50;
  double lambda_min_ratio = 0.01;
  std::uint64_t seed = 0;
  double tol = 1e-6;
  int max_passes = 10000;
  bool no_standardize = false;
  int threads = 1;
};

struct AssumptionsArgs {
  std::string truth;  // theta_star.json
  std::string data;   // empirical source, or
  int mc = 0;         // population Monte Carlo draws
  std::string out;
  std::uint64_t seed = 0;
  int sweeps = 500;
  // Optional theorem inputs; the conditions section is emitted only when
  // lambda_n and m_n are both set.
  double lambda_n = -1.0;
  double m_n = -1.0;
  double const_c = 1.0;
  double delta = 1.0;
  int threads = 1;
};

int cmd_simulate(const SimulateArgs& args);
int cmd_fit(const FitArgs& args);
int cmd_path(const PathArgs& args);
int cmd_roc(const RocArgs& args);
int cmd_stability(const StabilityArgs& args);
int cmd_hubs(const HubsArgs& args);
int cmd_assumptions(const AssumptionsArgs& args);

}  // namespace covising::cli
