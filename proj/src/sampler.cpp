#include "treegp/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

namespace treegp {

void McmcConfig::validate() const {
  if (rounds < 1) throw ParamError("rounds must be >= 1");
  if (burn_in < 0 || burn_in >= rounds)
    throw ParamError("need 0 <= burn_in < rounds");
  if (thin < 1) throw ParamError("thin must be >= 1");
  if (chains < 1) throw ParamError("chains must be >= 1");
  double sum = 0.0;
  for (double w : move_weights) {
    if (w < 0.0) throw ParamError("move weights must be nonnegative");
    sum += w;
  }
  if (sum > 1.0 + 1e-9) throw ParamError("move weights must sum to at most 1");
  if (!(p0 > 0.0 && p0 <= 2.0)) throw ParamError("p0 must lie in (0, 2]");
  if (checkpoint_every < 1) throw ParamError("checkpoint_every must be >= 1");
}

FixedHyper McmcConfig::resolved_hyper(int m) const {
  FixedHyper f = hyper;
  if (f.mu.size() == 0) f.mu = VectorXd::Zero(m);
  if (f.B.size() == 0) f.B = MatrixXd::Identity(m, m);
  if (f.V.size() == 0) f.V = MatrixXd::Identity(m, m);
  if (f.rho <= 0.0) f.rho = m;
  f.validate(m);
  return f;
}

ChainState init_chain(const MatrixXd* X, const VectorXd* Z,
                      const McmcConfig& config, int chain_index) {
  const int m = static_cast<int>(X->cols()) + 1;
  HyperState hyper = HyperState::init(config.resolved_hyper(m));
  Rng rng(derive_seed(config.seed, static_cast<uint64_t>(chain_index)));
  Tree tree(X, Z, McmcConfig::n_min_for(static_cast<int>(X->cols())));

  LeafState& leaf = *tree.root()->leaf;
  leaf.corr = prior_draw_corr(hyper.fixed, tree.m_x(), config.family,
                              config.p0, rng);
  leaf.corr.g = std::max(leaf.corr.g, 1e-4);  // startup conditioning
  leaf.beta = VectorXd::Zero(m);
  leaf.sigma2 = 1.0;
  leaf.tau2 = 1.0;
  leaf.rebuild_cache();
  return ChainState(std::move(tree), std::move(hyper), rng, chain_index);
}

MoveOutcome mcmc_round(ChainState& state, const McmcConfig& config) {
  MoveContext ctx;
  ctx.hyper = &state.hyper;
  ctx.rng = &state.rng;

  // (1) at most one tree move per round
  MoveOutcome move;
  double u = state.rng.uniform();
  const auto& w = config.move_weights;
  if (u < w[0])
    move = propose_grow(state.tree, ctx);
  else if (u < w[0] + w[1])
    move = propose_prune(state.tree, ctx);
  else if (u < w[0] + w[1] + w[2])
    move = propose_change(state.tree, ctx);
  else if (u < w[0] + w[1] + w[2] + w[3])
    move = propose_swap(state.tree, ctx);

  // (2) within-leaf updates
  for (Node* node : state.tree.leaves()) {
    LeafState& leaf = *node->leaf;
    mh_update_corr(leaf, state.hyper, state.rng);
    leaf.sigma2 = draw_sigma2_marginal(leaf, state.hyper, state.rng);
    leaf.beta = draw_beta(leaf, state.hyper, state.rng);
    leaf.tau2 = draw_tau2(leaf, state.hyper, state.rng);
  }

  // (3) hierarchical draws
  std::vector<const LeafState*> leaves;
  for (Node* node : state.tree.leaves()) leaves.push_back(node->leaf.get());
  state.hyper.beta0 = draw_beta0(leaves, state.hyper, state.rng);
  state.hyper.set_W(draw_W(leaves, state.hyper, state.rng));

  state.round += 1;
  return move;
}

double state_log_posterior(const Tree& tree, const HyperState& hyper) {
  const FixedHyper& fx = hyper.fixed;
  double lp = tree_log_prior(tree, fx.tree_a, fx.tree_b);
  for (const Node* node : tree.leaves()) {
    lp += log_marginal_corr(*node->leaf, hyper);
    lp += inv_gamma_log_density(node->leaf->tau2, 0.5 * fx.alpha_tau,
                                0.5 * fx.q_tau);
  }
  lp += mvn_log_density(hyper.beta0, fx.mu, hyper.B_chol);
  lp += inv_wishart_log_density(hyper.W, fx.rho * fx.V, fx.rho);
  return lp;
}

PosteriorSample snapshot_sample(const ChainState& state) {
  PosteriorSample s;
  s.tree = SampleTree::from_tree(state.tree);
  s.beta0 = state.hyper.beta0;
  s.W = state.hyper.W;
  s.round = state.round;
  s.chain = state.chain_index;
  s.log_posterior = state_log_posterior(state.tree, state.hyper);
  return s;
}

namespace {

const char* move_name(MoveKind k) {
  switch (k) {
    case MoveKind::Grow: return "grow";
    case MoveKind::Prune: return "prune";
    case MoveKind::Change: return "change";
    case MoveKind::Swap: return "swap";
    case MoveKind::Rotate: return "rotate";
  }
  return "?";
}

struct ChainOutput {
  std::vector<PosteriorSample> samples;
  std::vector<TraceRow> trace;
  std::map<std::string, std::pair<long, long>> move_counts;
  std::string error;
};

void run_one_chain(const MatrixXd& X, const VectorXd& Z,
                   const McmcConfig& config, int chain_index,
                   ChainOutput& out) {
  try {
    ChainState state = init_chain(&X, &Z, config, chain_index);
    for (int r = 1; r <= config.rounds; ++r) {
      MoveOutcome move = mcmc_round(state, config);
      if (move.proposed) {
        auto& c = out.move_counts[move_name(move.kind)];
        c.second += 1;
        if (move.accepted) c.first += 1;
      }
      TraceRow row;
      row.round = r;
      row.chain = chain_index;
      row.leaf_count = state.tree.leaf_count();
      row.log_posterior = state_log_posterior(state.tree, state.hyper);
      out.trace.push_back(row);
      if (r > config.burn_in && (r - config.burn_in) % config.thin == 0)
        out.samples.push_back(snapshot_sample(state));
      if (!config.out_dir.empty() && r % config.checkpoint_every == 0) {
        save_checkpoint(state, config.seed,
                        config.out_dir + "/checkpoint_chain" +
                            std::to_string(chain_index) + ".txt");
      }
    }
  } catch (const Error& e) {
    out.error = e.what();
  }
}

}  // namespace

FitResult run_chains(const MatrixXd& X, const VectorXd& Z,
                     const McmcConfig& config) {
  config.validate();
  std::vector<ChainOutput> outputs(config.chains);
  if (config.chains == 1) {
    run_one_chain(X, Z, config, 0, outputs[0]);
  } else {
    std::vector<std::thread> workers;
    for (int c = 0; c < config.chains; ++c)
      workers.emplace_back(run_one_chain, std::cref(X), std::cref(Z),
                           std::cref(config), c, std::ref(outputs[c]));
    for (auto& t : workers) t.join();
  }

  FitResult res;
  std::string failures;
  for (int c = 0; c < config.chains; ++c) {
    ChainOutput& o = outputs[c];
    if (!o.error.empty()) {
      failures += "chain " + std::to_string(c) + ": " + o.error + "\n";
      continue;  // surviving chains' output retained
    }
    res.samples.insert(res.samples.end(),
                       std::make_move_iterator(o.samples.begin()),
                       std::make_move_iterator(o.samples.end()));
    res.trace.insert(res.trace.end(), o.trace.begin(), o.trace.end());
    for (const auto& [k, v] : o.move_counts) {
      auto& acc = res.move_counts[k];
      acc.first += v.first;
      acc.second += v.second;
    }
  }
  if (!failures.empty() && res.samples.empty())
    throw NumericError("all chains aborted:\n" + failures);
  if (!failures.empty())
    std::fputs(("warning: some chains aborted:\n" + failures).c_str(), stderr);
  return res;
}

const PosteriorSample& map_tree(const std::vector<PosteriorSample>& samples) {
  if (samples.empty()) throw ParamError("map_tree needs at least one sample");
  const PosteriorSample* best = &samples[0];
  for (const PosteriorSample& s : samples) {
    bool better = s.log_posterior > best->log_posterior;
    bool tie = s.log_posterior == best->log_posterior;
    if (better ||
        (tie && (s.round < best->round ||
                 (s.round == best->round && s.chain < best->chain))))
      best = &s;
  }
  return *best;
}

void save_checkpoint(const ChainState& state, uint64_t config_seed,
                     const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write checkpoint: " + path);
  os << "treegp-checkpoint v1\n";
  os << "chain " << state.chain_index << "\n";
  os << "round " << state.round << "\n";
  os << "seed " << config_seed << "\n";
  os << "rng " << state.rng.save_state() << "\n";
  os << "beta0";
  for (int i = 0; i < state.hyper.beta0.size(); ++i)
    os << ' ' << format_double(state.hyper.beta0[i]);
  os << "\nW";
  for (int i = 0; i < state.hyper.W.rows(); ++i)
    for (int j = 0; j < state.hyper.W.cols(); ++j)
      os << ' ' << format_double(state.hyper.W(i, j));
  os << "\ntree " << serialize_tree(state.tree) << "\n";
}

ChainState load_checkpoint(const std::string& path, const MatrixXd* X,
                           const VectorXd* Z, const McmcConfig& config) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read checkpoint: " + path);
  std::string line;
  std::getline(is, line);
  if (line != "treegp-checkpoint v1")
    throw IoError("unsupported checkpoint header: " + line);

  auto expect_field = [&](const std::string& key) {
    std::getline(is, line);
    if (line.rfind(key + " ", 0) != 0)
      throw IoError("checkpoint missing field " + key);
    return line.substr(key.size() + 1);
  };

  int chain_index = std::stoi(expect_field("chain"));
  int round = std::stoi(expect_field("round"));
  (void)expect_field("seed");
  std::string rng_state = expect_field("rng");

  const int m = static_cast<int>(X->cols()) + 1;
  HyperState hyper = HyperState::init(config.resolved_hyper(m));
  {
    std::istringstream ss(expect_field("beta0"));
    for (int i = 0; i < m; ++i) ss >> hyper.beta0[i];
  }
  {
    std::istringstream ss(expect_field("W"));
    MatrixXd w(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) ss >> w(i, j);
    hyper.set_W(w);
  }
  SampleTree snap = parse_tree(expect_field("tree"));
  Tree tree = snap.to_tree(X, Z, McmcConfig::n_min_for(static_cast<int>(X->cols())),
                           true);
  Rng rng(0);
  rng.load_state(rng_state);
  ChainState state(std::move(tree), std::move(hyper), rng, chain_index);
  state.round = round;
  return state;
}

}  // namespace treegp
