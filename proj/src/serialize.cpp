#include "treegp/serialize.hpp"

#include <cctype>
#include <cstdio>
#include <cstring>
#include <sstream>

namespace treegp {

namespace {

std::unique_ptr<SampleNode> clone_sample(const SampleNode* src) {
  if (!src) return nullptr;
  auto dst = std::make_unique<SampleNode>();
  dst->split = src->split;
  dst->depth = src->depth;
  dst->leaf = src->leaf;
  dst->left = clone_sample(src->left.get());
  dst->right = clone_sample(src->right.get());
  return dst;
}

std::unique_ptr<SampleNode> snapshot(const Node* node) {
  auto out = std::make_unique<SampleNode>();
  out->split = node->split;
  out->depth = node->depth;
  if (node->is_leaf()) {
    const LeafState& l = *node->leaf;
    out->leaf.beta = l.beta;
    out->leaf.sigma2 = l.sigma2;
    out->leaf.tau2 = l.tau2;
    out->leaf.corr = l.corr;
    out->leaf.n = l.n();
  } else {
    out->left = snapshot(node->left.get());
    out->right = snapshot(node->right.get());
  }
  return out;
}

void count_leaves(const SampleNode* node, int& count) {
  if (node->is_leaf()) {
    ++count;
    return;
  }
  count_leaves(node->left.get(), count);
  count_leaves(node->right.get(), count);
}

void write_vector(std::ostream& os, const VectorXd& v) {
  os << '[';
  for (int i = 0; i < v.size(); ++i) {
    if (i) os << ',';
    os << format_double(v[i]);
  }
  os << ']';
}

void write_node(std::ostream& os, const SampleNode* node) {
  if (!node->is_leaf()) {
    os << "(n v=" << node->split->var
       << " s=" << format_double(node->split->value) << " q=" << node->depth
       << ' ';
    write_node(os, node->left.get());
    os << ' ';
    write_node(os, node->right.get());
    os << ')';
    return;
  }
  const SampleLeaf& l = node->leaf;
  os << "(l q=" << node->depth << " n=" << l.n << " beta=";
  write_vector(os, l.beta);
  os << " s2=" << format_double(l.sigma2) << " t2=" << format_double(l.tau2)
     << " fam=" << (l.corr.family == CorrFamily::Isotropic ? "iso" : "sep")
     << " d=";
  write_vector(os, l.corr.d);
  os << " g=" << format_double(l.corr.g)
     << " p0=" << format_double(l.corr.p0) << ')';
}

struct Parser {
  const char* p;
  const char* end;

  explicit Parser(const std::string& s) : p(s.data()), end(s.data() + s.size()) {}

  void skip_ws() {
    while (p < end && std::isspace(static_cast<unsigned char>(*p))) ++p;
  }
  [[noreturn]] void fail(const std::string& what) {
    throw IoError("tree parse error: " + what);
  }
  void expect(char c) {
    skip_ws();
    if (p >= end || *p != c) fail(std::string("expected '") + c + "'");
    ++p;
  }
  bool peek(char c) {
    skip_ws();
    return p < end && *p == c;
  }
  void expect_key(const char* key) {
    skip_ws();
    size_t len = std::strlen(key);
    if (p + len > end || std::strncmp(p, key, len) != 0)
      fail(std::string("expected key ") + key);
    p += len;
    expect('=');
  }
  double number() {
    skip_ws();
    char* q = nullptr;
    double v = std::strtod(p, &q);
    if (q == p) fail("expected number");
    p = q;
    return v;
  }
  long integer() { return static_cast<long>(number()); }
  VectorXd vector() {
    expect('[');
    std::vector<double> vals;
    if (!peek(']')) {
      vals.push_back(number());
      while (peek(',')) {
        ++p;
        vals.push_back(number());
      }
    }
    expect(']');
    VectorXd v(vals.size());
    for (size_t i = 0; i < vals.size(); ++i) v[i] = vals[i];
    return v;
  }
  std::string word() {
    skip_ws();
    const char* start = p;
    while (p < end && (std::isalnum(static_cast<unsigned char>(*p)))) ++p;
    return std::string(start, p);
  }

  std::unique_ptr<SampleNode> node() {
    expect('(');
    skip_ws();
    if (p >= end) fail("truncated");
    auto out = std::make_unique<SampleNode>();
    char tag = *p++;
    if (tag == 'n') {
      out->split = SplitRule{};
      expect_key("v");
      out->split->var = static_cast<int>(integer());
      expect_key("s");
      out->split->value = number();
      expect_key("q");
      out->depth = static_cast<int>(integer());
      out->left = node();
      out->right = node();
    } else if (tag == 'l') {
      expect_key("q");
      out->depth = static_cast<int>(integer());
      expect_key("n");
      out->leaf.n = static_cast<int>(integer());
      expect_key("beta");
      out->leaf.beta = vector();
      expect_key("s2");
      out->leaf.sigma2 = number();
      expect_key("t2");
      out->leaf.tau2 = number();
      expect_key("fam");
      std::string fam = word();
      if (fam == "iso")
        out->leaf.corr.family = CorrFamily::Isotropic;
      else if (fam == "sep")
        out->leaf.corr.family = CorrFamily::Separable;
      else
        fail("unknown correlation family " + fam);
      expect_key("d");
      out->leaf.corr.d = vector();
      expect_key("g");
      out->leaf.corr.g = number();
      expect_key("p0");
      out->leaf.corr.p0 = number();
    } else {
      fail("unknown node tag");
    }
    expect(')');
    return out;
  }
};

void fill_tree(Tree& tree, Node* live, const SampleNode* snap) {
  if (snap->is_leaf()) {
    if (!live->is_leaf()) throw IoError("tree snapshot shape mismatch");
    live->leaf->beta = snap->leaf.beta;
    live->leaf->sigma2 = snap->leaf.sigma2;
    live->leaf->tau2 = snap->leaf.tau2;
    live->leaf->corr = snap->leaf.corr;
    return;
  }
  // split the live leaf structurally
  live->split = snap->split;
  live->leaf.reset();
  live->left = std::make_unique<Node>();
  live->right = std::make_unique<Node>();
  live->left->parent = live;
  live->right->parent = live;
  live->left->depth = live->depth + 1;
  live->right->depth = live->depth + 1;
  live->left->leaf = std::make_unique<LeafState>();
  live->right->leaf = std::make_unique<LeafState>();
  fill_tree(tree, live->left.get(), snap->left.get());
  fill_tree(tree, live->right.get(), snap->right.get());
}

void assign_walk(const SampleNode* node, const MatrixXd& Xq, int row,
                 const std::vector<const SampleNode*>& order, int& out) {
  while (!node->is_leaf()) {
    node = Xq(row, node->split->var) <= node->split->value ? node->left.get()
                                                           : node->right.get();
  }
  for (size_t i = 0; i < order.size(); ++i)
    if (order[i] == node) {
      out = static_cast<int>(i);
      return;
    }
  throw StructError("leaf not found during assign");
}

void collect_sample_leaves(const SampleNode* node,
                           std::vector<const SampleNode*>& out) {
  if (node->is_leaf()) {
    out.push_back(node);
    return;
  }
  collect_sample_leaves(node->left.get(), out);
  collect_sample_leaves(node->right.get(), out);
}

}  // namespace

SampleTree::SampleTree(const SampleTree& other)
    : root(clone_sample(other.root.get())) {}

SampleTree& SampleTree::operator=(const SampleTree& other) {
  if (this != &other) root = clone_sample(other.root.get());
  return *this;
}

int SampleTree::leaf_count() const {
  int c = 0;
  if (root) count_leaves(root.get(), c);
  return c;
}

int SampleTree::max_depth() const {
  int d = 0;
  for (const SampleNode* l : leaves()) d = std::max(d, l->depth);
  return d;
}

SampleTree SampleTree::from_tree(const Tree& tree) {
  SampleTree out;
  out.root = snapshot(tree.root());
  return out;
}

Tree SampleTree::to_tree(const MatrixXd* X, const VectorXd* Z, int n_min,
                         bool build_caches) const {
  Tree tree(X, Z, n_min);
  fill_tree(tree, tree.root(), root.get());
  std::vector<int> all(X->rows());
  for (int i = 0; i < X->rows(); ++i) all[i] = i;
  if (!tree.repartition(tree.root(), all, build_caches))
    throw StructError("snapshot tree invalid for this dataset");
  return tree;
}

std::vector<const SampleNode*> SampleTree::leaves() const {
  std::vector<const SampleNode*> out;
  if (root) collect_sample_leaves(root.get(), out);
  return out;
}

std::vector<int> SampleTree::assign(const MatrixXd& Xq) const {
  std::vector<const SampleNode*> order = leaves();
  std::vector<int> out(Xq.rows());
  for (int i = 0; i < Xq.rows(); ++i)
    assign_walk(root.get(), Xq, i, order, out[i]);
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string serialize_tree(const SampleTree& tree) {
  std::ostringstream os;
  write_node(os, tree.root.get());
  return os.str();
}

std::string serialize_tree(const Tree& tree) {
  return serialize_tree(SampleTree::from_tree(tree));
}

SampleTree parse_tree(const std::string& text) {
  Parser parser(text);
  SampleTree out;
  out.root = parser.node();
  parser.skip_ws();
  if (parser.p != parser.end) throw IoError("trailing text after tree");
  return out;
}

}  // namespace treegp
