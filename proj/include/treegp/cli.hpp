#ifndef TREEGP_CLI_HPP
#define TREEGP_CLI_HPP

#include <iosfwd>
#include <optional>

#include "treegp/cv.hpp"

namespace treegp {

/*
 * Fit artifacts on disk (out_dir):
 *   model.json            scaling, columns, config echo, training data
 *   samples.jsonl         one posterior sample per line
 *   trace.csv             round, chain, leaves, log_posterior
 *   map_tree.txt          serialized MAP tree
 *   checkpoint_chain*.txt periodic resumable chain state
 */
struct ModelArtifacts {
  ScaleInfo scale;
  MatrixXd X;  // scaled training inputs
  VectorXd Z;  // standardized responses
  CorrFamily family = CorrFamily::Isotropic;
  double p0 = 2.0;
  int n_min = 0;
  std::vector<PosteriorSample> samples;
};

void write_fit_artifacts(const std::string& out_dir, const Dataset& data,
                         const McmcConfig& config, const FitResult& fit);
ModelArtifacts load_model(const std::string& model_dir);

// grid spec "41" or "41x21": points per input dimension over the
// training cube; trailing x1 entries squeeze away
MatrixXd grid_from_spec(const std::string& spec, int m_x);

void cmd_fit(const std::string& config_path, std::ostream& log);
void cmd_predict(const std::string& model_dir, const std::string& grid_spec,
                 const std::string& queries_path,
                 const std::vector<double>& quantiles,
                 const std::string& out_path, uint64_t seed,
                 std::ostream& log);
CvReport cmd_cv(const std::string& config_path, int folds, double level,
                std::optional<uint64_t> seed, std::ostream& log);

}  // namespace treegp

#endif
