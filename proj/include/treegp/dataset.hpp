#ifndef TREEGP_DATASET_HPP
#define TREEGP_DATASET_HPP

#include <string>
#include <vector>

#include "treegp/common.hpp"

namespace treegp {

struct ScaleInfo {
  VectorXd x_min, x_max;  // per input column
  double z_mean = 0.0, z_sd = 1.0;
  std::vector<std::string> x_names;
  std::string z_name;
};

/*
 * Dataset:
 *
 * raw columns plus the model-scale views: inputs rescaled into the unit
 * cube per column, responses centered and scaled to unit variance.
 * Reports are back-transformed through `scale`.
 */
struct Dataset {
  MatrixXd X_raw;
  VectorXd Z_raw;
  MatrixXd X;
  VectorXd Z;
  ScaleInfo scale;

  int n() const { return static_cast<int>(Z.size()); }
  int m_x() const { return static_cast<int>(X.cols()); }
  Dataset subset(const std::vector<int>& rows) const;  // keeps parent scale
};

// validates, scales, and names the columns
Dataset make_dataset(MatrixXd x_raw, VectorXd z_raw,
                     std::vector<std::string> x_names, std::string z_name);

// header row required; response defaults to the last column
Dataset load_csv(const std::string& path,
                 const std::string& response_column = "");

MatrixXd scale_inputs(const MatrixXd& raw, const ScaleInfo& scale);
MatrixXd unscale_inputs(const MatrixXd& scaled, const ScaleInfo& scale);

// synthetic datasets used by tests and as LGBB stand-ins
Dataset synth_step(int n, double split_at, double noise_sd, uint64_t seed);
Dataset synth_ridge(int n, uint64_t seed);   // 2-d, sharp ridge at x1 = 0.4
Dataset synth_smooth(int n, uint64_t seed);  // 1-d, single smooth regime

// mean surface / noise sd of the ridge generator on the raw scale
double ridge_mean(double x1, double x2);
double ridge_noise_sd(double x1);

}  // namespace treegp

#endif
