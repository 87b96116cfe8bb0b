#pragma once

// Structural psd matchers: the quadratic sandwich A*M*A' and the variance
// template diag(y.*z.*y) - (y.*z)*(y.*z)'/(a*(b + sum(z))).

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "convexcert/dag.hpp"

namespace convexcert {

enum class TemplateId { Sandwich, Variance, GeneralizedVariance };
std::string_view template_name(TemplateId id);

struct TemplateMatch {
  TemplateId id = TemplateId::Sandwich;
  /// Sandwich: "A" and optionally "M" (or "u" for u*u', "w" for diag(w)).
  /// Variance: "y", "z", and for the generalized form "a", "b".
  std::map<std::string, NodeId> bindings;
  /// Scalar in front of the template; absent means 1.
  std::optional<NodeId> prefactor;
  /// Nonnegative vector r with matched = prefactor*(template + diag(r)).
  std::optional<NodeId> residual;
  /// The prefactor is <= 0, so the matched node is nsd instead of psd.
  bool negated = false;
  /// Node whose value the instantiated template reproduces. Usually the node
  /// handed to the matcher; for a pair inside a longer sum it is the pair.
  NodeId matched = 0;
};

/// Interval oracle the matchers consult for side conditions.
using IntervalFn = std::function<Interval(NodeId)>;

/// A matrix term scale * tensor with scale a scalar node.
struct ScaledTerm {
  NodeId scale;
  NodeId tensor;
};

/// Splits a matrix node into scaled terms, distributing scalar prefactors
/// over sums and diag over vector sums.
std::vector<ScaledTerm> expand_terms(Builder& b, NodeId v);

std::optional<TemplateMatch> match_sandwich(Builder& b, NodeId v, const IntervalFn& iv);
/// Variance template with a = 1, b = 0.
std::optional<TemplateMatch> match_variance_template(Builder& b, NodeId v, const IntervalFn& iv);
std::optional<TemplateMatch> match_generalized_template(Builder& b, NodeId v, const IntervalFn& iv);
/// Sandwich first, then the generalized variance template.
std::optional<TemplateMatch> match_template(Builder& b, NodeId v, const IntervalFn& iv);

/// s_d*diag(d) - beta*u*u' against the generalized template, for scalar
/// nodes s_d, beta >= 0 and vectors d, u.
std::optional<TemplateMatch> match_variance_pair(Builder& b, NodeId s_d, NodeId d, NodeId beta, NodeId u,
                                                 const IntervalFn& iv);

/// Assembles prefactor*(template + diag(residual)) from a match, for
/// checking bindings numerically.
NodeId instantiate(Builder& b, const TemplateMatch& m);

}  // namespace convexcert
