#ifndef TREEGP_TREE_HPP
#define TREEGP_TREE_HPP

#include <limits>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "treegp/leaf.hpp"

namespace treegp {

// left child takes x[var] <= value
struct SplitRule {
  int var = 0;
  double value = 0.0;
};

struct Node {
  std::optional<SplitRule> split;
  std::unique_ptr<Node> left, right;
  Node* parent = nullptr;
  int depth = 0;
  std::unique_ptr<LeafState> leaf;  // set iff leaf node

  bool is_leaf() const { return !split.has_value(); }
};

/*
 * Tree:
 *
 * recursive binary partition over a fixed dataset.  Internal nodes
 * carry split rules, leaves carry per-region GP state.  Every leaf
 * holds at least n_min rows.
 */
class Tree {
 public:
  // null tree: one leaf holding every row
  Tree(const MatrixXd* X, const VectorXd* Z, int n_min);

  Tree clone() const;

  Node* root() { return root_.get(); }
  const Node* root() const { return root_.get(); }
  const MatrixXd& X() const { return *X_; }
  const VectorXd& Z() const { return *Z_; }
  int n_min() const { return n_min_; }
  int m_x() const { return static_cast<int>(X_->cols()); }

  std::vector<Node*> leaves() const;
  std::vector<Node*> internals() const;
  std::vector<Node*> growable_leaves() const;
  std::vector<Node*> prunable_nodes() const;
  // (parent, child) pairs with both nodes internal
  std::vector<std::pair<Node*, Node*>> internal_pairs() const;

  // distinct split thresholds for `var` keeping both sides >= n_min
  std::vector<double> admissible_splits(const std::vector<int>& rows,
                                        int var) const;
  bool has_admissible_split(const std::vector<int>& rows) const;

  // leaf ordinal (in leaves() order) per row of Xq
  std::vector<int> assign(const MatrixXd& Xq) const;
  int leaf_count() const;

  // rows of the dataset reaching `node` (ascending)
  std::vector<int> rows_below(const Node* node) const;

  // re-push `rows` down the subtree at `node`, rebuilding leaf data
  // (and caches when `build_caches`); false if any leaf drops below
  // n_min or a proposed factorization fails — state is then stale and
  // the caller must restore from a clone
  bool repartition(Node* node, const std::vector<int>& rows,
                   bool build_caches);

  // throws StructError unless leaves partition all rows with >= n_min each
  void validate_partition() const;

  // ownership slot holding `node` (root slot or a parent child slot)
  std::unique_ptr<Node>& slot_of(Node* node);
  void refresh_depths(Node* node, int depth);

 private:
  std::unique_ptr<Node> root_;
  const MatrixXd* X_;
  const VectorXd* Z_;
  int n_min_;
};

std::unique_ptr<Node> clone_subtree(const Node* src);

// a(1 + depth)^{-b}
double split_prob(int depth, double a, double b);

// sum of log split probabilities over internals plus log complements
// over leaves; split-rule probabilities excluded (they cancel in every
// implemented acceptance ratio)
double tree_log_prior(const Tree& tree, double a, double b);

enum class MoveKind { Grow, Prune, Change, Swap, Rotate };

struct MoveOutcome {
  MoveKind kind = MoveKind::Grow;
  bool proposed = false;  // false: skipped for lack of candidates
  bool accepted = false;
  double log_accept = -std::numeric_limits<double>::infinity();
  // diagnostics
  int n_growable = 0;
  int n_prunable_after = 0;
  Node* target = nullptr;
  bool inherit_left = true;   // grow: which child kept the parent params
  CorrParams fresh_corr;      // grow: prior-drawn params of the other child
  double fresh_tau2 = 1.0;
};

struct MoveContext {
  const HyperState* hyper = nullptr;
  Rng* rng = nullptr;
  // test hook: force every marginal-likelihood block to zero so the
  // chain targets the tree prior alone
  bool constant_likelihood = false;
};

MoveOutcome propose_grow(Tree& tree, const MoveContext& ctx);
MoveOutcome propose_prune(Tree& tree, const MoveContext& ctx);
MoveOutcome propose_change(Tree& tree, const MoveContext& ctx);
// dispatches to a rotate when parent and child split the same variable
MoveOutcome propose_swap(Tree& tree, const MoveContext& ctx);

// BST restructurings; valid only for same-variable parent/child rules,
// which is what keeps leaf partitions intact
void rotate_right(Tree& tree, Node* node);
void rotate_left(Tree& tree, Node* node);

// prior ratio of a rotation at `node` over the depth-changed node sets,
// evaluated at pre-move depths
double rotate_log_prior_ratio(const Node* node, bool right_rotation, double a,
                              double b);

// grow shape factor a(1+q)^{-b} (1 - a(2+q)^{-b})^2 / (1 - a(1+q)^{-b})
double grow_shape_log_ratio(int depth, double a, double b);

}  // namespace treegp

#endif
