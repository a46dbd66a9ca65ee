#include <algorithm>
#include <cmath>

#include "treegp/tree.hpp"

namespace treegp {

namespace {

double leaf_lm(const LeafState& leaf, const HyperState& hyper) {
  return log_marginal_corr(leaf, hyper);
}

// sum of marginal posteriors over the leaves under `node`
double subtree_lm(const Node* node, const HyperState& hyper) {
  if (node->is_leaf()) return leaf_lm(*node->leaf, hyper);
  return subtree_lm(node->left.get(), hyper) +
         subtree_lm(node->right.get(), hyper);
}

void collect_subtree(const Node* node, std::vector<const Node*>& out) {
  out.push_back(node);
  if (node->left) collect_subtree(node->left.get(), out);
  if (node->right) collect_subtree(node->right.get(), out);
}

// contribution of one node to the tree prior at a given depth
double node_prior_log(const Node* node, int depth, double a, double b) {
  double p = split_prob(depth, a, b);
  return node->is_leaf() ? std::log1p(-p) : std::log(p);
}

// gather region rows for a child given the parent rows and a rule
std::vector<int> side_rows(const MatrixXd& X, const std::vector<int>& rows,
                           const SplitRule& rule, bool left) {
  std::vector<int> out;
  for (int r : rows) {
    bool goes_left = X(r, rule.var) <= rule.value;
    if (goes_left == left) out.push_back(r);
  }
  return out;
}

std::unique_ptr<Node> make_child_leaf(const Tree& tree, Node* parent,
                                      const std::vector<int>& rows) {
  auto child = std::make_unique<Node>();
  child->parent = parent;
  child->depth = parent->depth + 1;
  child->leaf = std::make_unique<LeafState>();
  MatrixXd x(rows.size(), tree.X().cols());
  VectorXd z(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    x.row(i) = tree.X().row(rows[i]);
    z[i] = tree.Z()[rows[i]];
  }
  child->leaf->set_data(std::move(x), std::move(z), rows);
  return child;
}

// after accepting a grow or prune, refresh sigma2 then beta at a leaf
void refresh_leaf_params(LeafState& leaf, const HyperState& hyper, Rng& rng) {
  leaf.sigma2 = draw_sigma2_marginal(leaf, hyper, rng);
  leaf.beta = draw_beta(leaf, hyper, rng);
}

}  // namespace

MoveOutcome propose_grow(Tree& tree, const MoveContext& ctx) {
  MoveOutcome out;
  out.kind = MoveKind::Grow;
  Rng& rng = *ctx.rng;
  const HyperState& hyper = *ctx.hyper;
  const double a = hyper.fixed.tree_a, b = hyper.fixed.tree_b;

  std::vector<Node*> growable = tree.growable_leaves();
  out.n_growable = static_cast<int>(growable.size());
  if (growable.empty()) return out;

  Node* node = growable[rng.uniform_int(out.n_growable)];
  out.target = node;
  out.proposed = true;

  int var = rng.uniform_int(tree.m_x());
  std::vector<double> splits =
      tree.admissible_splits(node->leaf->data_indices, var);
  if (splits.empty()) return out;  // this variable cannot split the leaf
  SplitRule rule{var, splits[rng.uniform_int(static_cast<int>(splits.size()))]};

  std::vector<int> lrows =
      side_rows(tree.X(), node->leaf->data_indices, rule, true);
  std::vector<int> rrows =
      side_rows(tree.X(), node->leaf->data_indices, rule, false);

  std::unique_ptr<Node> lchild = make_child_leaf(tree, node, lrows);
  std::unique_ptr<Node> rchild = make_child_leaf(tree, node, rrows);

  out.inherit_left = rng.uniform_int(2) == 0;
  out.fresh_corr = prior_draw_corr(hyper.fixed, tree.m_x(),
                                   node->leaf->corr.family,
                                   node->leaf->corr.p0, rng);
  out.fresh_tau2 =
      rng.inv_gamma(0.5 * hyper.fixed.alpha_tau, 0.5 * hyper.fixed.q_tau);
  if (out.fresh_corr.g < hyper.fixed.nugget_floor) return out;

  LeafState& inherit = out.inherit_left ? *lchild->leaf : *rchild->leaf;
  LeafState& fresh = out.inherit_left ? *rchild->leaf : *lchild->leaf;
  inherit.corr = node->leaf->corr;
  inherit.tau2 = node->leaf->tau2;
  inherit.sigma2 = node->leaf->sigma2;
  inherit.beta = node->leaf->beta;
  fresh.corr = out.fresh_corr;
  fresh.tau2 = out.fresh_tau2;
  fresh.sigma2 = node->leaf->sigma2;
  fresh.beta = node->leaf->beta;

  double lm_block = 0.0;
  if (!ctx.constant_likelihood) {
    try {
      lchild->leaf->rebuild_cache();
      rchild->leaf->rebuild_cache();
      lm_block = leaf_lm(*lchild->leaf, hyper) + leaf_lm(*rchild->leaf, hyper) -
                 leaf_lm(*node->leaf, hyper) -
                 corr_log_prior(out.fresh_corr, hyper.fixed);
    } catch (const NumericError&) {
      return out;
    }
  }

  // |P'|: the grown node becomes prunable; its parent stops being one
  int prunable_after = static_cast<int>(tree.prunable_nodes().size()) + 1;
  Node* parent = node->parent;
  if (parent && parent->left->is_leaf() && parent->right->is_leaf())
    prunable_after -= 1;
  out.n_prunable_after = prunable_after;

  out.log_accept = std::log(static_cast<double>(out.n_growable)) -
                   std::log(static_cast<double>(prunable_after)) +
                   grow_shape_log_ratio(node->depth, a, b) + lm_block;

  if (std::log(rng.uniform()) < out.log_accept) {
    node->split = rule;
    node->leaf.reset();
    node->left = std::move(lchild);
    node->right = std::move(rchild);
    if (!ctx.constant_likelihood) {
      refresh_leaf_params(*node->left->leaf, hyper, rng);
      refresh_leaf_params(*node->right->leaf, hyper, rng);
    }
    out.accepted = true;
  }
  return out;
}

MoveOutcome propose_prune(Tree& tree, const MoveContext& ctx) {
  MoveOutcome out;
  out.kind = MoveKind::Prune;
  Rng& rng = *ctx.rng;
  const HyperState& hyper = *ctx.hyper;
  const double a = hyper.fixed.tree_a, b = hyper.fixed.tree_b;

  std::vector<Node*> prunable = tree.prunable_nodes();
  if (prunable.empty()) return out;
  Node* node = prunable[rng.uniform_int(static_cast<int>(prunable.size()))];
  out.target = node;
  out.proposed = true;

  out.inherit_left = rng.uniform_int(2) == 0;
  LeafState& kept = out.inherit_left ? *node->left->leaf : *node->right->leaf;
  LeafState& discarded =
      out.inherit_left ? *node->right->leaf : *node->left->leaf;

  std::vector<int> rows = tree.rows_below(node);
  auto merged = std::make_unique<LeafState>();
  {
    MatrixXd x(rows.size(), tree.X().cols());
    VectorXd z(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      x.row(i) = tree.X().row(rows[i]);
      z[i] = tree.Z()[rows[i]];
    }
    merged->set_data(std::move(x), std::move(z), rows);
  }
  merged->corr = kept.corr;
  merged->tau2 = kept.tau2;
  merged->sigma2 = kept.sigma2;
  merged->beta = kept.beta;

  double lm_block = 0.0;
  if (!ctx.constant_likelihood) {
    try {
      merged->rebuild_cache();
      lm_block = leaf_lm(*merged, hyper) +
                 corr_log_prior(discarded.corr, hyper.fixed) -
                 leaf_lm(*node->left->leaf, hyper) -
                 leaf_lm(*node->right->leaf, hyper);
    } catch (const NumericError&) {
      return out;
    }
  }

  /* growable count of the pruned tree: drop the two children from the
   * current growable set; the merged node is growable by construction
   * (its own split is admissible) */
  int growable_after = 1;
  for (Node* g : tree.growable_leaves())
    if (g != node->left.get() && g != node->right.get()) ++growable_after;
  out.n_growable = growable_after;

  out.log_accept = std::log(static_cast<double>(prunable.size())) -
                   std::log(static_cast<double>(growable_after)) -
                   grow_shape_log_ratio(node->depth, a, b) + lm_block;

  if (std::log(rng.uniform()) < out.log_accept) {
    node->split.reset();
    node->left.reset();
    node->right.reset();
    node->leaf = std::move(merged);
    if (!ctx.constant_likelihood) refresh_leaf_params(*node->leaf, hyper, rng);
    out.accepted = true;
  }
  return out;
}

MoveOutcome propose_change(Tree& tree, const MoveContext& ctx) {
  MoveOutcome out;
  out.kind = MoveKind::Change;
  Rng& rng = *ctx.rng;
  const HyperState& hyper = *ctx.hyper;

  std::vector<Node*> internals = tree.internals();
  if (internals.empty()) return out;
  Node* node = internals[rng.uniform_int(static_cast<int>(internals.size()))];
  bool upward = rng.uniform_int(2) == 0;
  out.target = node;
  out.proposed = true;

  // adjacent distinct observed value along the split column
  const int var = node->split->var;
  const double s = node->split->value;
  double best = upward ? std::numeric_limits<double>::infinity()
                       : -std::numeric_limits<double>::infinity();
  bool found = false;
  for (int r = 0; r < tree.X().rows(); ++r) {
    double v = tree.X()(r, var);
    if (upward && v > s && v < best) best = v, found = true;
    if (!upward && v < s && v > best) best = v, found = true;
  }
  if (!found) return out;  // split already at the extreme observed value

  std::vector<int> rows = tree.rows_below(node);
  double lm_before =
      ctx.constant_likelihood ? 0.0 : subtree_lm(node, hyper);

  std::unique_ptr<Node> backup = clone_subtree(node);
  node->split->value = best;
  if (!tree.repartition(node, rows, !ctx.constant_likelihood)) {
    std::unique_ptr<Node>& slot = tree.slot_of(node);
    Node* parent = node->parent;
    slot = std::move(backup);
    slot->parent = parent;
    return out;
  }

  double lm_after = ctx.constant_likelihood ? 0.0 : subtree_lm(node, hyper);
  out.log_accept = lm_after - lm_before;

  if (std::log(rng.uniform()) < out.log_accept) {
    out.accepted = true;
  } else {
    std::unique_ptr<Node>& slot = tree.slot_of(node);
    Node* parent = node->parent;
    slot = std::move(backup);
    slot->parent = parent;
  }
  return out;
}

MoveOutcome propose_swap(Tree& tree, const MoveContext& ctx) {
  MoveOutcome out;
  out.kind = MoveKind::Swap;
  Rng& rng = *ctx.rng;
  const HyperState& hyper = *ctx.hyper;

  std::vector<std::pair<Node*, Node*>> pairs = tree.internal_pairs();
  if (pairs.empty()) return out;
  auto [parent, child] = pairs[rng.uniform_int(static_cast<int>(pairs.size()))];
  out.target = parent;
  out.proposed = true;

  if (parent->split->var == child->split->var) {
    // same-variable swaps empty a region; rotate instead
    out.kind = MoveKind::Rotate;
    bool right = child == parent->left.get();
    out.log_accept = rotate_log_prior_ratio(parent, right,
                                            hyper.fixed.tree_a,
                                            hyper.fixed.tree_b);
    if (std::log(rng.uniform()) < out.log_accept) {
      if (right)
        rotate_right(tree, parent);
      else
        rotate_left(tree, parent);
      out.accepted = true;
    }
    return out;
  }

  std::vector<int> rows = tree.rows_below(parent);
  double lm_before =
      ctx.constant_likelihood ? 0.0 : subtree_lm(parent, hyper);

  std::unique_ptr<Node> backup = clone_subtree(parent);
  // child may be either of parent's children; find it again by rule
  std::swap(parent->split, child->split);
  if (!tree.repartition(parent, rows, !ctx.constant_likelihood)) {
    std::unique_ptr<Node>& slot = tree.slot_of(parent);
    Node* up = parent->parent;
    slot = std::move(backup);
    slot->parent = up;
    return out;
  }

  double lm_after = ctx.constant_likelihood ? 0.0 : subtree_lm(parent, hyper);
  out.log_accept = lm_after - lm_before;

  if (std::log(rng.uniform()) < out.log_accept) {
    out.accepted = true;
  } else {
    std::unique_ptr<Node>& slot = tree.slot_of(parent);
    Node* up = parent->parent;
    slot = std::move(backup);
    slot->parent = up;
  }
  return out;
}

void rotate_right(Tree& tree, Node* node) {
  Node* pivot = node->left.get();
  if (!pivot || pivot->is_leaf())
    throw StructError("rotate_right needs an internal left child");
  Node* up = node->parent;
  std::unique_ptr<Node>& slot = tree.slot_of(node);

  std::unique_ptr<Node> node_own = std::move(slot);
  std::unique_ptr<Node> pivot_own = std::move(node_own->left);
  node_own->left = std::move(pivot_own->right);
  node_own->left->parent = node_own.get();
  node_own->parent = pivot_own.get();
  pivot_own->right = std::move(node_own);
  pivot_own->parent = up;
  slot = std::move(pivot_own);
  tree.refresh_depths(slot.get(), up ? up->depth + 1 : 0);
}

void rotate_left(Tree& tree, Node* node) {
  Node* pivot = node->right.get();
  if (!pivot || pivot->is_leaf())
    throw StructError("rotate_left needs an internal right child");
  Node* up = node->parent;
  std::unique_ptr<Node>& slot = tree.slot_of(node);

  std::unique_ptr<Node> node_own = std::move(slot);
  std::unique_ptr<Node> pivot_own = std::move(node_own->right);
  node_own->right = std::move(pivot_own->left);
  node_own->right->parent = node_own.get();
  node_own->parent = pivot_own.get();
  pivot_own->left = std::move(node_own);
  pivot_own->parent = up;
  slot = std::move(pivot_own);
  tree.refresh_depths(slot.get(), up ? up->depth + 1 : 0);
}

double rotate_log_prior_ratio(const Node* node, bool right_rotation, double a,
                              double b) {
  const Node* pivot = right_rotation ? node->left.get() : node->right.get();
  if (!pivot || pivot->is_leaf())
    throw StructError("rotation needs an internal child on that side");
  // right-rotate: pivot's left subtree rises, node's right subtree sinks
  const Node* rising = right_rotation ? pivot->left.get() : pivot->right.get();
  const Node* sinking = right_rotation ? node->right.get() : node->left.get();

  std::vector<const Node*> inc, dec;
  collect_subtree(sinking, inc);
  collect_subtree(rising, dec);

  double lr = 0.0;
  for (const Node* n : inc)
    lr += node_prior_log(n, n->depth + 1, a, b) -
          node_prior_log(n, n->depth, a, b);
  for (const Node* n : dec)
    lr += node_prior_log(n, n->depth - 1, a, b) -
          node_prior_log(n, n->depth, a, b);
  return lr;
}

}  // namespace treegp
