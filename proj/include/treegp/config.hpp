#ifndef TREEGP_CONFIG_HPP
#define TREEGP_CONFIG_HPP

#include "treegp/sampler.hpp"

namespace treegp {

/*
 * FitConfig:
 *
 * declarative run description parsed from a flat key = value file.
 * Matrix-valued hyperparameters are configured as scalars (mu is a
 * constant vector, B and V scalar multiples of the identity).
 */
struct FitConfig {
  std::string data_path;
  std::string response;  // empty: last column
  std::string out_dir = "treegp_out";
  McmcConfig mcmc;
  double mu_scalar = 0.0;
  double b_scale = 1.0;
  double v_scale = 1.0;
  double rho = 0.0;  // 0: use m
  int workers = 0;   // cv fan-out; 0: pick from hardware

  // collects every problem before throwing a single ParamError
  static FitConfig parse_file(const std::string& path);
  static FitConfig parse_text(const std::string& text,
                              const std::string& origin);

  FixedHyper resolve_hyper(int m) const;
};

}  // namespace treegp

#endif
