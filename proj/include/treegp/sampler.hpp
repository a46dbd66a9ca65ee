#ifndef TREEGP_SAMPLER_HPP
#define TREEGP_SAMPLER_HPP

#include <array>
#include <map>
#include <string>

#include "treegp/serialize.hpp"

namespace treegp {

struct McmcConfig {
  int rounds = 15000;
  int burn_in = 5000;
  int thin = 10;
  int chains = 1;
  uint64_t seed = 0;
  // grow, prune, change, swap(/rotate); may sum below 1, the remainder
  // being the chance of no tree move in a round
  std::array<double, 4> move_weights{0.2, 0.2, 0.4, 0.2};
  CorrFamily family = CorrFamily::Isotropic;
  double p0 = 2.0;
  FixedHyper hyper;  // resolve() fills unset geometry for dimension m
  int checkpoint_every = 1000;
  std::string out_dir;  // when nonempty: trace + checkpoints on disk

  void validate() const;
  FixedHyper resolved_hyper(int m) const;
  static int n_min_for(int m_x) { return m_x + 3; }  // m + 2
};

struct PosteriorSample {
  SampleTree tree;
  VectorXd beta0;
  MatrixXd W;
  int round = 0;
  int chain = 0;
  double log_posterior = 0.0;
};

struct ChainState {
  Tree tree;
  HyperState hyper;
  Rng rng;
  int chain_index = 0;
  int round = 0;  // completed rounds

  ChainState(Tree t, HyperState h, Rng r, int idx)
      : tree(std::move(t)), hyper(std::move(h)), rng(r), chain_index(idx) {}
};

// fresh chain at round 0 over (X, Z); leaf state drawn from the prior
ChainState init_chain(const MatrixXd* X, const VectorXd* Z,
                      const McmcConfig& config, int chain_index);

// one sweep: tree move, per-leaf updates, hierarchical draws
MoveOutcome mcmc_round(ChainState& state, const McmcConfig& config);

// joint log posterior of the saveable state (beta and sigma2 integrated
// out); the quantity map_tree maximizes
double state_log_posterior(const Tree& tree, const HyperState& hyper);

PosteriorSample snapshot_sample(const ChainState& state);

struct TraceRow {
  int round = 0;
  int chain = 0;
  int leaf_count = 0;
  double log_posterior = 0.0;
};

struct FitResult {
  std::vector<PosteriorSample> samples;  // chain-major, round ascending
  std::vector<TraceRow> trace;
  std::map<std::string, std::pair<long, long>> move_counts;  // accepted/proposed
};

FitResult run_chains(const MatrixXd& X, const VectorXd& Z,
                     const McmcConfig& config);

const PosteriorSample& map_tree(const std::vector<PosteriorSample>& samples);

// checkpointing (versioned text header; resumable)
void save_checkpoint(const ChainState& state, uint64_t config_seed,
                     const std::string& path);
ChainState load_checkpoint(const std::string& path, const MatrixXd* X,
                           const VectorXd* Z, const McmcConfig& config);

}  // namespace treegp

#endif
