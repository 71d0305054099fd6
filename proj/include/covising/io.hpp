#pragma once

#include <string>
#include <vector>

#include "covising/model.hpp"
#include "covising/simulate.hpp"

namespace covising::io {

// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

// Headerless comma-separated numeric matrix. Parse errors carry file, row
// and column. All writes in this module are atomic (temp file + rename).
Eigen::MatrixXd read_matrix_csv(const std::string& path);
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);

// Dataset directory convention: X.csv (n x p, may be empty for p = 0) and
// Y.csv (n x q with 0/1 entries).
Dataset read_dataset(const std::string& dir);
void write_dataset(const std::string& dir, const Dataset& data);

// Coefficient file: {"q":..,"p":..,"entries":[[j,k,l,value],...]} holding
// the nonzero coefficients with 1-based node indices and j <= k. Duplicate
// or out-of-range entries are ParseErrors.
void write_theta_json(const std::string& path, const ThetaParams& theta);
ThetaParams read_theta_json(const std::string& path);

// Edge list, one "j<TAB>k" line per edge, 1-based, j < k.
void write_graph_tsv(const std::string& path, const GraphSpec& graph);

// Generic atomic text write.
void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

}  // namespace covising::io
