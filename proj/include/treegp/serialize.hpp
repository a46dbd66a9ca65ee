#ifndef TREEGP_SERIALIZE_HPP
#define TREEGP_SERIALIZE_HPP

#include <memory>
#include <string>

#include "treegp/tree.hpp"

namespace treegp {

/*
 * SampleTree:
 *
 * a parameter-only snapshot of a Tree — structure, split rules, depths
 * and leaf parameters, without data or factorization caches.  This is
 * what posterior samples store and what the text form round-trips.
 */
struct SampleLeaf {
  VectorXd beta;
  double sigma2 = 1.0, tau2 = 1.0;
  CorrParams corr;
  int n = 0;  // observation count at snapshot time
};

struct SampleNode {
  std::optional<SplitRule> split;
  int depth = 0;
  std::unique_ptr<SampleNode> left, right;
  SampleLeaf leaf;

  bool is_leaf() const { return !split.has_value(); }
};

struct SampleTree {
  std::unique_ptr<SampleNode> root;

  SampleTree() = default;
  SampleTree(const SampleTree& other);
  SampleTree& operator=(const SampleTree& other);
  SampleTree(SampleTree&&) = default;
  SampleTree& operator=(SampleTree&&) = default;

  int leaf_count() const;
  int max_depth() const;

  static SampleTree from_tree(const Tree& tree);

  // rebuild a live tree over the given dataset (validates n_min)
  Tree to_tree(const MatrixXd* X, const VectorXd* Z, int n_min,
               bool build_caches) const;

  // leaf ordinal (depth-first order) per row of Xq
  std::vector<int> assign(const MatrixXd& Xq) const;
  std::vector<const SampleNode*> leaves() const;
};

/* Deterministic text form: nested parenthesized nodes with split
 * variable, threshold, depth and leaf parameter values at fixed
 * 17-significant-digit precision (exact double round trip).  Used for
 * checkpoints, the samples file and MAP tree reporting. */
std::string serialize_tree(const SampleTree& tree);
std::string serialize_tree(const Tree& tree);
SampleTree parse_tree(const std::string& text);

std::string format_double(double v);

}  // namespace treegp

#endif
