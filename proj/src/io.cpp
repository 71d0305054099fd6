#include "covising/io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>

#include <json.hpp>

namespace covising::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_text(const std::string& path, const std::string& content) {
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("rename " + tmp.string() + " -> " + path + ": " + ec.message());
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    const char* ptr = line.data();
    const char* end = line.data() + line.size();
    int col = 0;
    while (true) {
      ++col;
      double v;
      auto res = std::from_chars(ptr, end, v);
      if (res.ec != std::errc()) {
        // allow leading spaces around fields
        const char* probe = ptr;
        while (probe < end && (*probe == ' ' || *probe == '\t')) ++probe;
        res = std::from_chars(probe, end, v);
        if (res.ec != std::errc())
          throw ParseError(path + ":" + std::to_string(lineno) + ": column " +
                           std::to_string(col) + ": expected a number");
      }
      row.push_back(v);
      ptr = res.ptr;
      while (ptr < end && (*ptr == ' ' || *ptr == '\t')) ++ptr;
      if (ptr == end) break;
      if (*ptr != ',')
        throw ParseError(path + ":" + std::to_string(lineno) + ": column " +
                         std::to_string(col) + ": expected ','");
      ++ptr;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(path + ":" + std::to_string(lineno) + ": row has " +
                       std::to_string(row.size()) + " fields, expected " +
                       std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path + ": empty matrix");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.front().size(); ++j) m(i, j) = rows[i][j];
  return m;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 8 + m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  write_text(path, out);
}

Dataset read_dataset(const std::string& dir) {
  fs::path base(dir);
  Eigen::MatrixXd Y = read_matrix_csv((base / "Y.csv").string());
  fs::path xpath = base / "X.csv";
  Eigen::MatrixXd X;
  if (fs::exists(xpath)) {
    X = read_matrix_csv(xpath.string());
  } else {
    X.resize(Y.rows(), 0);  // covariate-free model
  }
  try {
    return Dataset(std::move(X), std::move(Y));
  } catch (const std::invalid_argument& e) {
    throw ParseError(dir + ": " + e.what());
  }
}

void write_dataset(const std::string& dir, const Dataset& data) {
  fs::path base(dir);
  if (data.p() > 0) write_matrix_csv((base / "X.csv").string(), data.X);
  write_matrix_csv((base / "Y.csv").string(), data.Y);
}

void write_theta_json(const std::string& path, const ThetaParams& theta) {
  json doc;
  doc["q"] = theta.dims().q;
  doc["p"] = theta.dims().p;
  json entries = json::array();
  for (std::int64_t c = 0; c < theta.size(); ++c) {
    double v = theta.data()[c];
    if (v == 0.0) continue;
    auto [j, k, l] = theta.unflatten(c);
    entries.push_back(json::array({j + 1, k + 1, l, v}));
  }
  doc["entries"] = std::move(entries);
  write_text(path, doc.dump(2) + "\n");
}

ThetaParams read_theta_json(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!doc.contains("q") || !doc.contains("p") || !doc.contains("entries"))
    throw ParseError(path + ": expected keys q, p, entries");
  ThetaParams theta;
  try {
    theta = ThetaParams(ModelDims(doc["q"].get<int>(), doc["p"].get<int>()));
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  std::vector<char> seen(theta.size(), 0);
  for (const auto& e : doc["entries"]) {
    if (!e.is_array() || e.size() != 4 || !e[0].is_number_integer() ||
        !e[1].is_number_integer() || !e[2].is_number_integer() || !e[3].is_number())
      throw ParseError(path + ": each entry must be [j, k, l, value]");
    int j = e[0].get<int>() - 1;
    int k = e[1].get<int>() - 1;
    int l = e[2].get<int>();
    double v = e[3].get<double>();
    if (j < 0 || k < 0 || j >= theta.dims().q || k >= theta.dims().q || l < 0 ||
        l > theta.dims().p)
      throw ParseError(path + ": entry (" + std::to_string(j + 1) + "," +
                       std::to_string(k + 1) + "," + std::to_string(l) + ") out of range");
    if (j > k)
      throw ParseError(path + ": entries must have j <= k (symmetric storage)");
    std::int64_t idx = theta.flat_index(j, k, l);
    if (seen[idx])
      throw ParseError(path + ": duplicate entry (" + std::to_string(j + 1) + "," +
                       std::to_string(k + 1) + "," + std::to_string(l) + ")");
    seen[idx] = 1;
    theta.set(j, k, l, v);
  }
  return theta;
}

void write_graph_tsv(const std::string& path, const GraphSpec& graph) {
  std::string out;
  for (auto [j, k] : graph.edges)
    out += std::to_string(j + 1) + "\t" + std::to_string(k + 1) + "\n";
  write_text(path, out);
}

}  // namespace covising::io
