#pragma once

// Symbolic gradients and Hessians of scalar expressions with respect to a
// scalar or vector variable.

#include <stdexcept>
#include <string>
#include <unordered_map>

#include "convexcert/dag.hpp"

namespace convexcert {

struct NotDifferentiable : std::runtime_error {
  NotDifferentiable(NodeId n, const std::string& what) : std::runtime_error(what), node(n) {}
  NodeId node;
};

struct NonScalarObjective : std::runtime_error {
  explicit NonScalarObjective(const Shape& s)
      : std::runtime_error("objective must be scalar, got " + s.str()) {}
};

struct Variable {
  std::string name;
  Shape shape;
};

struct DerivativeResult {
  NodeId gradient;
  NodeId hessian;
};

/// Memoized forward rules over canonical nodes. For a vector variable of
/// dimension n, grad() of a scalar node is an n-vector and jac() of a
/// k-vector node is a k x n matrix; for a scalar variable both are one rank
/// lower.
class Differentiator {
 public:
  Differentiator(Builder& b, Variable wrt);

  NodeId grad(NodeId scalar_node);
  NodeId jac(NodeId vector_node);
  /// Derivative of either kind, dispatching on the node's shape.
  NodeId derivative(NodeId id);
  /// Jacobian of a gradient expression: the Hessian.
  NodeId hessian(NodeId scalar_node);

  /// First and second derivative of an elementary function at `a`.
  NodeId d1(FnKind f, NodeId a, NodeId at_node);
  NodeId d2(FnKind f, NodeId a, NodeId at_node);

 private:
  NodeId zero_grad();
  NodeId zero_jac(const Shape& of);
  NodeId lift(NodeId diag_entries, NodeId J);    // diag(a) * J
  NodeId jt_v(NodeId J, NodeId v);               // J' * v
  NodeId outer_g(NodeId u, NodeId g);            // u * g'
  NodeId chain_jac(const std::vector<NodeId>& chain, NodeId whole);
  bool depends(NodeId id) const { return b_.dag().depends_on(id, wrt_.name); }

  Builder& b_;
  Variable wrt_;
  std::unordered_map<NodeId, NodeId> grad_memo_;
  std::unordered_map<NodeId, NodeId> jac_memo_;
};

/// Gradient of the (simplified) root.
NormalizedDag differentiate(const NormalizedDag& dag, const Variable& wrt, RangeHint hint = {});
/// Hessian of the (simplified) root.
NormalizedDag hessian(const NormalizedDag& dag, const Variable& wrt, RangeHint hint = {});
/// Both at once, sharing memo tables. Nodes live in dag's arena.
DerivativeResult derivatives(const NormalizedDag& dag, const Variable& wrt, RangeHint hint = {});

/// f''(g) * grad(g) grad(g)' + f'(g) * H(g) for an elementary f applied to a
/// scalar expression g.
NodeId hessian_of_composition(Builder& b, FnKind f, NodeId g, const Variable& wrt);

}  // namespace convexcert
