#include "treegp/tree.hpp"

#include <algorithm>
#include <cmath>

namespace treegp {

namespace {

void collect(Node* node, std::vector<Node*>& leaves,
             std::vector<Node*>& internals) {
  if (node->is_leaf()) {
    leaves.push_back(node);
    return;
  }
  internals.push_back(node);
  collect(node->left.get(), leaves, internals);
  collect(node->right.get(), leaves, internals);
}

}  // namespace

Tree::Tree(const MatrixXd* X, const VectorXd* Z, int n_min)
    : X_(X), Z_(Z), n_min_(n_min) {
  if (X_->rows() != Z_->size()) throw ParamError("X/Z row count mismatch");
  if (X_->rows() < n_min_) throw StructError("fewer rows than n_min");
  root_ = std::make_unique<Node>();
  root_->leaf = std::make_unique<LeafState>();
  std::vector<int> all(X_->rows());
  for (int i = 0; i < X_->rows(); ++i) all[i] = i;
  root_->leaf->set_data(*X_, *Z_, std::move(all));
}

std::unique_ptr<Node> clone_subtree(const Node* src) {
  auto dst = std::make_unique<Node>();
  dst->split = src->split;
  dst->depth = src->depth;
  if (src->leaf) dst->leaf = std::make_unique<LeafState>(*src->leaf);
  if (src->left) {
    dst->left = clone_subtree(src->left.get());
    dst->left->parent = dst.get();
  }
  if (src->right) {
    dst->right = clone_subtree(src->right.get());
    dst->right->parent = dst.get();
  }
  return dst;
}

Tree Tree::clone() const {
  Tree t(X_, Z_, n_min_);
  t.root_ = clone_subtree(root_.get());
  return t;
}

std::vector<Node*> Tree::leaves() const {
  std::vector<Node*> l, i;
  collect(root_.get(), l, i);
  return l;
}

std::vector<Node*> Tree::internals() const {
  std::vector<Node*> l, i;
  collect(root_.get(), l, i);
  return i;
}

std::vector<Node*> Tree::growable_leaves() const {
  std::vector<Node*> out;
  for (Node* leaf : leaves())
    if (has_admissible_split(leaf->leaf->data_indices)) out.push_back(leaf);
  return out;
}

std::vector<Node*> Tree::prunable_nodes() const {
  std::vector<Node*> out;
  for (Node* node : internals())
    if (node->left->is_leaf() && node->right->is_leaf()) out.push_back(node);
  return out;
}

std::vector<std::pair<Node*, Node*>> Tree::internal_pairs() const {
  std::vector<std::pair<Node*, Node*>> out;
  for (Node* node : internals()) {
    if (!node->left->is_leaf()) out.emplace_back(node, node->left.get());
    if (!node->right->is_leaf()) out.emplace_back(node, node->right.get());
  }
  return out;
}

std::vector<double> Tree::admissible_splits(const std::vector<int>& rows,
                                            int var) const {
  std::vector<double> vals;
  vals.reserve(rows.size());
  for (int r : rows) vals.push_back((*X_)(r, var));
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  std::vector<double> out;
  const int n = static_cast<int>(rows.size());
  for (double v : vals) {
    int left = 0;
    for (int r : rows)
      if ((*X_)(r, var) <= v) ++left;
    if (left >= n_min_ && n - left >= n_min_) out.push_back(v);
  }
  return out;
}

bool Tree::has_admissible_split(const std::vector<int>& rows) const {
  for (int v = 0; v < m_x(); ++v)
    if (!admissible_splits(rows, v).empty()) return true;
  return false;
}

std::vector<int> Tree::assign(const MatrixXd& Xq) const {
  std::vector<Node*> l = leaves();
  std::vector<int> out(Xq.rows());
  for (int i = 0; i < Xq.rows(); ++i) {
    const Node* node = root_.get();
    while (!node->is_leaf()) {
      node = Xq(i, node->split->var) <= node->split->value ? node->left.get()
                                                           : node->right.get();
    }
    auto it = std::find(l.begin(), l.end(), node);
    out[i] = static_cast<int>(it - l.begin());
  }
  return out;
}

int Tree::leaf_count() const { return static_cast<int>(leaves().size()); }

std::vector<int> Tree::rows_below(const Node* node) const {
  std::vector<int> rows;
  if (node->is_leaf()) {
    rows = node->leaf->data_indices;
  } else {
    std::vector<int> l = rows_below(node->left.get());
    std::vector<int> r = rows_below(node->right.get());
    rows = std::move(l);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

bool Tree::repartition(Node* node, const std::vector<int>& rows,
                       bool build_caches) {
  if (node->is_leaf()) {
    if (static_cast<int>(rows.size()) < n_min_) return false;
    std::vector<int> sorted = rows;
    std::sort(sorted.begin(), sorted.end());
    MatrixXd x(sorted.size(), X_->cols());
    VectorXd z(sorted.size());
    for (size_t i = 0; i < sorted.size(); ++i) {
      x.row(i) = X_->row(sorted[i]);
      z[i] = (*Z_)[sorted[i]];
    }
    node->leaf->set_data(std::move(x), std::move(z), std::move(sorted));
    if (build_caches) {
      try {
        node->leaf->rebuild_cache();
      } catch (const NumericError&) {
        return false;
      }
    }
    return true;
  }
  std::vector<int> lrows, rrows;
  for (int r : rows) {
    if ((*X_)(r, node->split->var) <= node->split->value)
      lrows.push_back(r);
    else
      rrows.push_back(r);
  }
  return repartition(node->left.get(), lrows, build_caches) &&
         repartition(node->right.get(), rrows, build_caches);
}

void Tree::validate_partition() const {
  std::vector<char> seen(X_->rows(), 0);
  for (Node* leaf : leaves()) {
    if (leaf->leaf->n() < n_min_)
      throw StructError("leaf holds fewer than n_min rows");
    for (int r : leaf->leaf->data_indices) {
      if (r < 0 || r >= X_->rows() || seen[r])
        throw StructError("leaves do not partition the dataset");
      seen[r] = 1;
    }
  }
  for (char c : seen)
    if (!c) throw StructError("row missing from every leaf");
}

std::unique_ptr<Node>& Tree::slot_of(Node* node) {
  if (!node->parent) return root_;
  if (node->parent->left.get() == node) return node->parent->left;
  return node->parent->right;
}

void Tree::refresh_depths(Node* node, int depth) {
  node->depth = depth;
  if (node->left) refresh_depths(node->left.get(), depth + 1);
  if (node->right) refresh_depths(node->right.get(), depth + 1);
}

double split_prob(int depth, double a, double b) {
  if (depth < 0 || !(a > 0.0 && a < 1.0) || b < 0.0)
    throw ParamError("split_prob: need depth >= 0, 0 < a < 1, b >= 0");
  return a * std::pow(1.0 + depth, -b);
}

double tree_log_prior(const Tree& tree, double a, double b) {
  double lp = 0.0;
  for (const Node* node : tree.internals())
    lp += std::log(split_prob(node->depth, a, b));
  for (const Node* node : tree.leaves())
    lp += std::log1p(-split_prob(node->depth, a, b));
  return lp;
}

double grow_shape_log_ratio(int depth, double a, double b) {
  return std::log(split_prob(depth, a, b)) +
         2.0 * std::log1p(-split_prob(depth + 1, a, b)) -
         std::log1p(-split_prob(depth, a, b));
}

}  // namespace treegp
