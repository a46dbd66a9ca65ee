#include "treegp/dataset.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace treegp {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

Dataset make_dataset(MatrixXd x_raw, VectorXd z_raw,
                     std::vector<std::string> x_names, std::string z_name) {
  const int n = static_cast<int>(z_raw.size());
  const int m_x = static_cast<int>(x_raw.cols());
  if (x_raw.rows() != n) throw ParamError("input/response row count mismatch");
  if (m_x < 1) throw ParamError("need at least one input column");
  if (static_cast<int>(x_names.size()) != m_x)
    throw ParamError("input name count mismatch");
  const int n_min = m_x + 3;
  if (n < n_min)
    throw ParamError("need at least " + std::to_string(n_min) + " rows, got " +
                     std::to_string(n));

  Dataset d;
  d.X_raw = std::move(x_raw);
  d.Z_raw = std::move(z_raw);
  d.scale.x_names = std::move(x_names);
  d.scale.z_name = std::move(z_name);

  d.scale.x_min = d.X_raw.colwise().minCoeff();
  d.scale.x_max = d.X_raw.colwise().maxCoeff();
  for (int j = 0; j < m_x; ++j) {
    if (!(d.scale.x_max[j] - d.scale.x_min[j] > 0.0))
      throw ParamError("degenerate (constant) input column '" +
                       d.scale.x_names[j] + "'");
  }
  d.scale.z_mean = d.Z_raw.mean();
  double ss = (d.Z_raw.array() - d.scale.z_mean).square().sum();
  d.scale.z_sd = std::sqrt(ss / (n - 1));
  if (!(d.scale.z_sd > 0.0))
    throw ParamError("degenerate (constant) response column '" +
                     d.scale.z_name + "'");

  d.X = scale_inputs(d.X_raw, d.scale);
  d.Z = (d.Z_raw.array() - d.scale.z_mean) / d.scale.z_sd;
  return d;
}

Dataset Dataset::subset(const std::vector<int>& rows) const {
  Dataset out;
  out.scale = scale;
  out.X_raw.resize(rows.size(), X_raw.cols());
  out.X.resize(rows.size(), X.cols());
  out.Z_raw.resize(rows.size());
  out.Z.resize(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    out.X_raw.row(i) = X_raw.row(rows[i]);
    out.X.row(i) = X.row(rows[i]);
    out.Z_raw[i] = Z_raw[rows[i]];
    out.Z[i] = Z[rows[i]];
  }
  return out;
}

Dataset load_csv(const std::string& path, const std::string& response_column) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open data file: " + path);
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty data file: " + path);
  std::vector<std::string> names = split_csv_line(line);
  if (names.size() < 2)
    throw IoError(path + ": need a header with at least two columns");

  int z_col;
  if (response_column.empty()) {
    z_col = static_cast<int>(names.size()) - 1;
  } else {
    z_col = -1;
    for (size_t j = 0; j < names.size(); ++j)
      if (names[j] == response_column) z_col = static_cast<int>(j);
    if (z_col < 0)
      throw IoError(path + ": response column '" + response_column +
                    "' not found");
  }

  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != names.size())
      throw IoError(path + ":" + std::to_string(line_no) + ": expected " +
                    std::to_string(names.size()) + " cells, got " +
                    std::to_string(cells.size()));
    std::vector<double> vals(cells.size());
    for (size_t j = 0; j < cells.size(); ++j) {
      const std::string& c = cells[j];
      char* endp = nullptr;
      vals[j] = std::strtod(c.c_str(), &endp);
      if (c.empty() || endp != c.c_str() + c.size())
        throw IoError(path + ":" + std::to_string(line_no) + ": column '" +
                      names[j] + "': non-numeric cell '" + c + "'");
    }
    rows.push_back(std::move(vals));
  }

  const int n = static_cast<int>(rows.size());
  const int m_x = static_cast<int>(names.size()) - 1;
  MatrixXd x(n, m_x);
  VectorXd z(n);
  std::vector<std::string> x_names;
  for (size_t j = 0; j < names.size(); ++j)
    if (static_cast<int>(j) != z_col) x_names.push_back(names[j]);
  for (int i = 0; i < n; ++i) {
    int k = 0;
    for (size_t j = 0; j < names.size(); ++j) {
      if (static_cast<int>(j) == z_col)
        z[i] = rows[i][j];
      else
        x(i, k++) = rows[i][j];
    }
  }
  return make_dataset(std::move(x), std::move(z), std::move(x_names),
                      names[z_col]);
}

MatrixXd scale_inputs(const MatrixXd& raw, const ScaleInfo& scale) {
  if (raw.cols() != scale.x_min.size())
    throw ParamError("query dimension does not match the model inputs");
  MatrixXd out(raw.rows(), raw.cols());
  for (int j = 0; j < raw.cols(); ++j)
    out.col(j) = (raw.col(j).array() - scale.x_min[j]) /
                 (scale.x_max[j] - scale.x_min[j]);
  return out;
}

MatrixXd unscale_inputs(const MatrixXd& scaled, const ScaleInfo& scale) {
  MatrixXd out(scaled.rows(), scaled.cols());
  for (int j = 0; j < scaled.cols(); ++j)
    out.col(j) = scaled.col(j).array() * (scale.x_max[j] - scale.x_min[j]) +
                 scale.x_min[j];
  return out;
}

Dataset synth_step(int n, double split_at, double noise_sd, uint64_t seed) {
  Rng rng(seed);
  MatrixXd x(n, 1);
  VectorXd z(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = n > 1 ? static_cast<double>(i) / (n - 1) : 0.5;
    z[i] = (x(i, 0) <= split_at ? 0.0 : 1.0) + rng.normal(0.0, noise_sd);
  }
  return make_dataset(std::move(x), std::move(z), {"x"}, "z");
}

double ridge_mean(double x1, double x2) {
  // smooth on either side of x1 = 0.4 with an x2-dependent jump there
  double left = 0.3 + 0.8 * x2 * std::sin(2.5 * x1);
  if (x1 <= 0.4) return left;
  return 0.3 + 0.8 * x2 * std::sin(1.0) + 0.6 * x2 -
         (0.9 + 0.4 * x2) * (x1 - 0.4);
}

double ridge_noise_sd(double x1) {
  double w = (x1 - 0.4) / 0.15;
  return 0.02 + 0.15 * std::exp(-w * w);
}

Dataset synth_ridge(int n, uint64_t seed) {
  Rng rng(seed);
  MatrixXd x(n, 2);
  VectorXd z(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = rng.uniform();
    x(i, 1) = rng.uniform();
    z[i] = ridge_mean(x(i, 0), x(i, 1)) +
           rng.normal(0.0, ridge_noise_sd(x(i, 0)));
  }
  return make_dataset(std::move(x), std::move(z), {"speed", "angle"}, "lift");
}

Dataset synth_smooth(int n, uint64_t seed) {
  Rng rng(seed);
  MatrixXd x(n, 1);
  VectorXd z(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = n > 1 ? static_cast<double>(i) / (n - 1) : 0.5;
    z[i] = std::sin(3.0 * x(i, 0)) + rng.normal(0.0, 0.05);
  }
  return make_dataset(std::move(x), std::move(z), {"x"}, "z");
}

}  // namespace treegp
