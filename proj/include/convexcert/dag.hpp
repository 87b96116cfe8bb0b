#pragma once

// Hash-consed expression DAG shared by every analysis phase, plus the
// canonicalizing smart constructors that implement simplification.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "convexcert/interval.hpp"
#include "convexcert/lang.hpp"
#include "convexcert/ops.hpp"
#include "convexcert/rational.hpp"
#include "convexcert/shape.hpp"

namespace convexcert {

using NodeId = std::uint32_t;

enum class Op {
  Const,      // scalar rational constant
  Ones,       // vector(1) of dimension rows
  Zero,       // zero tensor of the node's shape
  Symbol,     // variable or parameter leaf
  // surface operators, present after normalize and rewritten by simplify
  Neg,
  Sub,
  Div,        // numerator / denominator, elementwise with scalar broadcast
  RawMul,     // '*' as written: scalar scaling or matrix product
  RawPow,     // '^' with a scalar exponent expression
  EMul,
  EDiv,
  EPow,
  VectorOf,   // vector(c) with c scalar
  // shared by surface and canonical forms
  Add,
  Transpose,
  Fn,
  Sum,
  Diag,
  Norm2,
  // canonical only
  Mul,     // n-ary commutative product; scalars, scaling, or elementwise
  Pow,     // base ^ exponent (exponent is usually a Const)
  MatMul,  // n-ary non-commutative matrix product
  Dot,     // u' * v for vectors u, v
  Outer,   // u * v' for vectors u, v
};

std::string_view op_name(Op op);

struct Node {
  Op op = Op::Const;
  std::vector<NodeId> kids;
  Shape shape;
  Rational value;           // Const
  std::string name;         // Symbol
  FnKind fn = FnKind::Exp;  // Fn

  friend bool operator==(const Node&, const Node&) = default;
};

/// Append-only node arena. Identical nodes are stored once, so structural
/// equality is id equality, and ids are topologically ordered.
class Dag {
 public:
  NodeId intern(Node n);
  const Node& operator[](NodeId id) const { return nodes_[id]; }
  std::size_t size() const { return nodes_.size(); }

  /// Ids reachable from root, ascending (children before parents).
  std::vector<NodeId> reachable(NodeId root) const;
  /// True when the subtree under id mentions symbol `name`.
  bool depends_on(NodeId id, const std::string& name) const;
  std::optional<NodeId> find_symbol(const std::string& name) const;

 private:
  struct KeyHash {
    std::size_t operator()(const Node& n) const;
  };
  std::vector<Node> nodes_;
  std::unordered_map<Node, NodeId, KeyHash> index_;
  mutable std::unordered_map<std::string, std::vector<std::int8_t>> depends_memo_;
};

/// A root in a shared arena together with its leaf table.
struct NormalizedDag {
  std::shared_ptr<Dag> dag;
  NodeId root = 0;
  std::map<std::string, NodeId> leaves;

  const Node& node(NodeId id) const { return (*dag)[id]; }
  const Node& root_node() const { return (*dag)[root]; }
  /// Number of nodes reachable from the root.
  std::size_t node_count() const { return dag->reachable(root).size(); }
  /// JSON text {"nodes":[{id, op, children, shape}], "root": id}.
  std::string dump_json() const;
};

/// Hash-consing makes structural equality an id comparison.
inline bool structurally_equal(NodeId a, NodeId b) { return a == b; }

/// AST annotated with shapes, produced by infer_shapes and consumed by
/// normalize.
struct ShapedExpr {
  Op op = Op::Const;
  std::vector<ShapedExpr> kids;
  Shape shape;
  Rational value;
  std::string name;
  FnKind fn = FnKind::Exp;
  std::size_t position = 0;

  std::size_t size() const;
};

ShapedExpr infer_shapes(const lang::Ast& ast, const SymbolTable& symbols);
/// Hash-conses a shaped tree into a fresh arena.
NormalizedDag normalize(const ShapedExpr& tree);
/// Hash-conses a shaped tree into an existing arena.
NodeId normalize_into(Dag& dag, const ShapedExpr& tree);

/// Range information available to the builder when deciding whether a
/// cancellation x/x -> 1 is legal. Returns a bound for the given node when
/// one is known beyond the structural one.
using RangeHint = std::function<std::optional<Interval>(NodeId)>;

/// Canonicalizing constructors. Every node built through them is in normal
/// form, so simplify is a memoized rebuild of a DAG through this interface.
class Builder {
 public:
  explicit Builder(Dag& dag, RangeHint hint = {});

  Dag& dag() { return dag_; }

  NodeId constant(const Rational& c);
  NodeId ones(std::string dim);
  NodeId zero(Shape shape);
  NodeId identity(const std::string& dim);
  NodeId symbol(const std::string& name, const Shape& shape);
  /// c broadcast to `shape` (scalar or vector).
  NodeId filled(const Rational& c, Shape shape);

  NodeId add(std::vector<NodeId> terms);
  NodeId add(NodeId a, NodeId b) { return add(std::vector<NodeId>{a, b}); }
  NodeId sub(NodeId a, NodeId b);
  NodeId neg(NodeId a);
  /// Commutative product: scalar products, scalar scaling, elementwise.
  NodeId mul(std::vector<NodeId> factors);
  NodeId mul(NodeId a, NodeId b) { return mul(std::vector<NodeId>{a, b}); }
  NodeId scale(const Rational& c, NodeId a);
  NodeId pow(NodeId base, const Rational& e);
  NodeId pow(NodeId base, NodeId exponent);
  /// a / b elementwise, b scalar or of a's shape.
  NodeId div(NodeId a, NodeId b);
  NodeId matmul(NodeId a, NodeId b);
  NodeId transpose(NodeId a);
  NodeId fn(FnKind kind, NodeId a);
  NodeId sum(NodeId v);
  NodeId diag(NodeId v);
  NodeId norm2(NodeId v);
  NodeId dot(NodeId u, NodeId v);
  NodeId outer(NodeId u, NodeId v);

  /// Rebuilds any node (surface or canonical) into normal form.
  NodeId simplify(NodeId id);

  /// Structural range of a node with symbols unconstrained unless the hint
  /// says otherwise. Used for legality of cancellations.
  Interval range(NodeId id);

  bool is_const(NodeId id) const { return dag_[id].op == Op::Const; }
  bool is_const(NodeId id, const Rational& v) const {
    return dag_[id].op == Op::Const && dag_[id].value == v;
  }
  /// (c, rest) with id == c * rest; rest is the unit constant for constants.
  std::pair<Rational, NodeId> split_coefficient(NodeId id);
  /// (scalar part, tensor part); scalar part is Const 1 when there is none.
  std::pair<NodeId, NodeId> split_scalar(NodeId id);
  /// Multiplicative factors as (base, exponent), looking through Mul, Div
  /// and constant powers. The constant coefficient is left out.
  std::vector<std::pair<NodeId, Rational>> factors(NodeId id);
  /// Product of items raised to +1 or -1.
  NodeId product(const std::vector<std::pair<NodeId, int>>& items);

  /// When set, x/x cancels for every base, not only provably nonzero ones.
  /// Used where the identity only has to hold on the domain of an existing
  /// expression that already divides by the base.
  void set_cancel_all(bool on) { cancel_all_ = on; }

 private:
  NodeId make(Op op, std::vector<NodeId> kids, Shape shape);
  struct Flat;
  void flatten_into(Flat& f, NodeId id, int sign, int source);
  NodeId matmul_chain(std::vector<NodeId> chain);
  void pythagorean(std::vector<std::pair<Rational, NodeId>>& terms, const Shape& shape);
  std::optional<NodeId> factor_common(const std::vector<std::pair<Rational, NodeId>>& terms);
  bool known_nonzero(NodeId id) { return range(id).excludes_zero(); }
  bool known_nonneg(NodeId id) { return range(id).is_nonneg(); }
  Shape broadcast(const Shape& a, const Shape& b) const;

  Dag& dag_;
  RangeHint hint_;
  bool cancel_all_ = false;
  std::unordered_map<NodeId, NodeId> simplify_memo_;
  std::unordered_map<NodeId, Interval> range_memo_;
};

/// simplify over a NormalizedDag; the result shares the arena.
NormalizedDag simplify(const NormalizedDag& d, RangeHint hint = {});

/// Surface-syntax text of a node, parseable by the language front end.
std::string render_node(const Dag& dag, NodeId id);

/// Interval of a node given the intervals of its children. Matrix results
/// use the psd/nsd encoding. Shared by the builder's structural ranges and
/// by positivity propagation.
Interval combine_node(const Dag& dag, NodeId id, const std::vector<Interval>& kids);

/// Restrictions the operators of an expression place on their arguments
/// (log argument > 0, sqrt argument >= 0, ...), keyed by the canonical id of
/// the restricted subexpression.
using DomainFacts = std::map<NodeId, Interval>;
DomainFacts harvest_domain_facts(Builder& b, NodeId root);

/// Hint reporting the given facts, intersected with `extra` when present.
RangeHint facts_hint(DomainFacts facts, RangeHint extra = {});

}  // namespace convexcert
